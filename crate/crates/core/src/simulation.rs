//! Synthetic scenarios with known support, and support-recovery scoring.
//!
//! Two generators are provided:
//!
//! * **linear**: AR(1) columns with unit marginal variance, paired so each
//!   column has cross-correlation `rho` with exactly one partner, plus `E`
//!   positive spikes of height `tau * extreme_scale` per column. The response
//!   is `X beta* + eps` with centered Gamma noise.
//! * **mixture**: four predictor blocks (spiked, mean-shifted, correlated
//!   decoys with their own spikes, white noise). Rows holding a spike of the
//!   first block follow component 1, all other rows component 2.
//!
//! The rows carrying the spikes of the true-support columns are reserved:
//! no other column has a spike there, and they never overlap each other.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, ShapeBuilder};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_quantile_path, quantile_lambda_max, threshold_restrict, QuantileConfig, ThresholdConfig};
use crate::data::{standardize, Coefficients, Dataset};
use crate::error::{Error, Result};
use crate::penalty::{PenaltyFamily, PenaltySpec};
use crate::selection::oracle_sparsity_select;
use crate::solver::{
    default_lambda_grid, fit_path_until, lambda_grid, FitConfig, DEFAULT_PATH_LENGTH, DEFAULT_PATH_MIN_RATIO,
};

/// Number of columns in each of the first three mixture blocks.
pub const MIXTURE_BLOCK: usize = 10;

/// Default AR(1) coefficient of the linear design. Strongly persistent
/// columns make the bulk of the data a poor guide to the support.
pub const LINEAR_AR_COEFF: f64 = 0.99;
/// Default predictor-scale height of one unit of `tau`, linear model.
pub const LINEAR_EXTREME_SCALE: f64 = 1.5;
/// Default predictor-scale height of one unit of `tau`, mixture model.
pub const MIXTURE_EXTREME_SCALE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioModel {
    Linear,
    Mixture,
}

impl std::str::FromStr for ScenarioModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ScenarioModel::Linear),
            "mixture" => Ok(ScenarioModel::Mixture),
            other => Err(Error::InvalidSpec(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub model: ScenarioModel,
    pub n: usize,
    pub p: usize,
    /// True support size (linear model; the mixture always uses one block).
    pub s: usize,
    /// Spike height in units of `extreme_scale`.
    pub tau: f64,
    /// Spikes per column.
    pub events: usize,
    pub gamma_shape: f64,
    pub gamma_rate: f64,
    pub rho: f64,
    pub ar_coeff: f64,
    /// Value of every nonzero true coefficient.
    pub beta_value: f64,
    /// Predictor-scale size of one unit of `tau`.
    pub extreme_scale: f64,
    /// Mean shift of the second mixture block, in predictor variances.
    pub mixture_shift: f64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            model: ScenarioModel::Linear,
            n: 1000,
            p: 750,
            s: 10,
            tau: 11.0,
            events: 1,
            gamma_shape: 1.0,
            gamma_rate: 0.33,
            rho: 0.9,
            ar_coeff: LINEAR_AR_COEFF,
            beta_value: 1.0,
            extreme_scale: LINEAR_EXTREME_SCALE,
            mixture_shift: 2.0,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn linear() -> Self {
        Self::default()
    }

    pub fn mixture() -> Self {
        Self {
            model: ScenarioModel::Mixture,
            tau: 9.0,
            extreme_scale: MIXTURE_EXTREME_SCALE,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    /// Number of true-support columns.
    pub fn support_size(&self) -> usize {
        match self.model {
            ScenarioModel::Linear => self.s,
            ScenarioModel::Mixture => MIXTURE_BLOCK,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.n < 10 {
            return bad(format!("n = {} is too small", self.n));
        }
        if self.events == 0 || self.events > self.n / 10 {
            return bad(format!("events must lie in 1..={}, got {}", self.n / 10, self.events));
        }
        if !(self.tau >= 0.0) || !(self.extreme_scale > 0.0) {
            return bad("tau must be non-negative and extreme_scale positive".into());
        }
        if !(self.gamma_shape > 0.0) || !(self.gamma_rate > 0.0) {
            return bad("Gamma shape and rate must be positive".into());
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if !(self.ar_coeff > -1.0 && self.ar_coeff < 1.0) {
            return bad(format!("ar_coeff must lie in (-1, 1), got {}", self.ar_coeff));
        }
        let k = self.support_size();
        match self.model {
            ScenarioModel::Linear => {
                if self.s == 0 || self.s > self.p {
                    return bad(format!("need 1 <= s <= p, got s = {}, p = {}", self.s, self.p));
                }
            }
            ScenarioModel::Mixture => {
                if self.p < 3 * MIXTURE_BLOCK {
                    return bad(format!("mixture needs p >= {}", 3 * MIXTURE_BLOCK));
                }
            }
        }
        if k * self.events * 2 > self.n {
            return bad("too many reserved spike rows for n".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioTruth {
    pub true_support: Vec<usize>,
    #[serde(serialize_with = "crate::data::serialize_array")]
    pub true_beta: Array1<f64>,
    /// Spike rows of every column, sorted.
    pub extreme_rows: Vec<Vec<usize>>,
    /// Mixture only: component (1 or 2) of each row.
    pub component_assignment: Option<Vec<u8>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub f1: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub support_size: usize,
}

/// Support recovery of `estimated` against the true support.
pub fn score_support(estimated: &Coefficients, truth: &ScenarioTruth) -> MetricReport {
    let p = truth.true_beta.len();
    let truth_set: BTreeSet<usize> = truth.true_support.iter().copied().collect();
    let est = estimated.support();
    let tp = est.iter().filter(|j| truth_set.contains(j)).count();
    let fp = est.len() - tp;
    let n_true = truth_set.len();
    let tpr = if n_true == 0 { 0.0 } else { tp as f64 / n_true as f64 };
    let fpr = if p > n_true { fp as f64 / (p - n_true) as f64 } else { 0.0 };
    let precision = if est.is_empty() { 0.0 } else { tp as f64 / est.len() as f64 };
    let f1 = if precision + tpr == 0.0 {
        0.0
    } else {
        2.0 * precision * tpr / (precision + tpr)
    };
    MetricReport {
        f1,
        tpr,
        fpr,
        support_size: est.len(),
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Gamma noise with the given shape and rate, centered at its sample mean.
fn centered_gamma(rng: &mut ChaCha8Rng, n: usize, shape: f64, rate: f64) -> Result<Array1<f64>> {
    let dist = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let mut eps = Array1::from_shape_fn(n, |_| dist.sample(rng));
    let mean = eps.sum() / n as f64;
    eps -= mean;
    Ok(eps)
}

/// Spike rows: `reserved_cols` get pairwise-disjoint rows that no other
/// column uses; every other column draws `events` distinct rows from the
/// rest, avoiding the rows of its partner.
fn assign_spike_rows(
    rng: &mut ChaCha8Rng,
    n: usize,
    p: usize,
    events: usize,
    reserved_cols: &[usize],
    partner: impl Fn(usize) -> Option<usize>,
    spiked: impl Fn(usize) -> bool,
) -> Vec<Vec<usize>> {
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); p];
    let pool = sample(rng, n, reserved_cols.len() * events).into_vec();
    let reserved: BTreeSet<usize> = pool.iter().copied().collect();
    for (k, &j) in reserved_cols.iter().enumerate() {
        let mut r = pool[k * events..(k + 1) * events].to_vec();
        r.sort_unstable();
        rows[j] = r;
    }
    let free: Vec<usize> = (0..n).filter(|i| !reserved.contains(i)).collect();
    for j in 0..p {
        if !rows[j].is_empty() || !spiked(j) {
            continue;
        }
        let avoid: BTreeSet<usize> = partner(j).map(|k| rows[k].iter().copied().collect()).unwrap_or_default();
        let mut chosen = BTreeSet::new();
        while chosen.len() < events {
            let i = free[rng.random_range(0..free.len())];
            if !avoid.contains(&i) {
                chosen.insert(i);
            }
        }
        rows[j] = chosen.into_iter().collect();
    }
    rows
}

/// Linear-model scenario.
pub fn generate_linear(spec: &ScenarioSpec) -> Result<(Dataset, ScenarioTruth)> {
    if spec.model != ScenarioModel::Linear {
        return Err(Error::InvalidSpec("generate_linear needs model = linear".into()));
    }
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut support = sample(&mut rng, p, spec.s).into_vec();
    support.sort_unstable();

    // innovations; column j < p/2 is paired with j + p/2
    let half = p / 2;
    let partner = |j: usize| -> Option<usize> {
        if j < half {
            Some(j + half)
        } else if j < 2 * half {
            Some(j - half)
        } else {
            None
        }
    };
    let mut innov = Array2::<f64>::zeros((n, p).f());
    for j in 0..p {
        for i in 0..n {
            innov[[i, j]] = normal(&mut rng);
        }
    }
    let rho = spec.rho;
    let mix = (1.0 - rho * rho).sqrt();
    for j in half..2 * half {
        let base = innov.column(j - half).to_owned();
        let mut col = innov.column_mut(j);
        col.zip_mut_with(&base, |own, b| *own = rho * b + mix * *own);
    }

    let phi = spec.ar_coeff;
    let ar_scale = (1.0 - phi * phi).sqrt();
    let mut x = Array2::<f64>::zeros((n, p).f());
    for j in 0..p {
        let e = innov.column(j);
        let mut col = x.column_mut(j);
        col[0] = e[0];
        for i in 1..n {
            col[i] = phi * col[i - 1] + ar_scale * e[i];
        }
    }

    let extreme_rows = assign_spike_rows(&mut rng, n, p, spec.events, &support, partner, |_| true);
    let height = spec.tau * spec.extreme_scale;
    if height > 0.0 {
        for (j, rows) in extreme_rows.iter().enumerate() {
            for &i in rows {
                x[[i, j]] += height;
            }
        }
    }

    let mut beta = Array1::zeros(p);
    for &j in &support {
        beta[j] = spec.beta_value;
    }
    let eps = centered_gamma(&mut rng, n, spec.gamma_shape, spec.gamma_rate)?;
    let mut y = eps;
    for &j in &support {
        y.scaled_add(spec.beta_value, &x.column(j));
    }

    let truth = ScenarioTruth {
        true_support: support,
        true_beta: beta,
        extreme_rows,
        component_assignment: None,
    };
    Ok((Dataset::new(x, y)?, truth))
}

/// Mixture-model scenario. Columns `0..10` are the spiked block (the true
/// support), `10..20` the mean-shifted block, `20..30` the correlated decoys
/// of the first block, and the rest white noise.
pub fn generate_mixture(spec: &ScenarioSpec) -> Result<(Dataset, ScenarioTruth)> {
    if spec.model != ScenarioModel::Mixture {
        return Err(Error::InvalidSpec("generate_mixture needs model = mixture".into()));
    }
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let b = MIXTURE_BLOCK;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut x = Array2::<f64>::zeros((n, p).f());
    for j in 0..p {
        for i in 0..n {
            x[[i, j]] = normal(&mut rng);
        }
    }
    // decoys share the Gaussian part of their first-block partner
    let mix = (1.0 - spec.rho * spec.rho).sqrt();
    for j in 0..b {
        let base = x.column(j).to_owned();
        let mut col = x.column_mut(2 * b + j);
        col.zip_mut_with(&base, |own, v| *own = spec.rho * v + mix * *own);
    }

    // each shifted column draws its own half of the rows
    for j in b..2 * b {
        for i in sample(&mut rng, n, n / 2) {
            x[[i, j]] += spec.mixture_shift;
        }
    }

    let support: Vec<usize> = (0..b).collect();
    let partner = |j: usize| -> Option<usize> {
        if j < b {
            Some(2 * b + j)
        } else if (2 * b..3 * b).contains(&j) {
            Some(j - 2 * b)
        } else {
            None
        }
    };
    let spiked = |j: usize| j < b || (2 * b..3 * b).contains(&j);
    let extreme_rows = assign_spike_rows(&mut rng, n, p, spec.events, &support, partner, spiked);
    let height = spec.tau * spec.extreme_scale;
    if height > 0.0 {
        for (j, rows) in extreme_rows.iter().enumerate() {
            for &i in rows {
                x[[i, j]] += height;
            }
        }
    }

    let mut component = vec![2u8; n];
    for j in 0..b {
        for &i in &extreme_rows[j] {
            component[i] = 1;
        }
    }

    let eps = centered_gamma(&mut rng, n, spec.gamma_shape, spec.gamma_rate)?;
    let mut y = eps;
    for i in 0..n {
        let cols = if component[i] == 1 { 0..b } else { b..2 * b };
        let signal: f64 = cols.map(|j| x[[i, j]]).sum();
        y[i] += spec.beta_value * signal;
    }

    let mut beta = Array1::zeros(p);
    for &j in &support {
        beta[j] = spec.beta_value;
    }
    let truth = ScenarioTruth {
        true_support: support,
        true_beta: beta,
        extreme_rows,
        component_assignment: Some(component),
    };
    Ok((Dataset::new(x, y)?, truth))
}

/// Dispatches on `spec.model`.
pub fn generate(spec: &ScenarioSpec) -> Result<(Dataset, ScenarioTruth)> {
    match spec.model {
        ScenarioModel::Linear => generate_linear(spec),
        ScenarioModel::Mixture => generate_mixture(spec),
    }
}

/// One row of a sweep table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    ExLasso4,
    ExLasso6,
    Lasso,
    Scad,
    Mcp,
    ExScad4,
    ExScad6,
    ExMcp4,
    ExMcp6,
    Median,
    Q090,
    Q099,
    Q0999,
    Threshold,
}

impl Method {
    pub const ALL: [Method; 14] = [
        Method::ExLasso4,
        Method::ExLasso6,
        Method::Lasso,
        Method::Scad,
        Method::Mcp,
        Method::ExScad4,
        Method::ExScad6,
        Method::ExMcp4,
        Method::ExMcp6,
        Method::Median,
        Method::Q090,
        Method::Q099,
        Method::Q0999,
        Method::Threshold,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::ExLasso4 => "exlasso4",
            Method::ExLasso6 => "exlasso6",
            Method::Lasso => "lasso",
            Method::Scad => "scad",
            Method::Mcp => "mcp",
            Method::ExScad4 => "exscad4",
            Method::ExScad6 => "exscad6",
            Method::ExMcp4 => "exmcp4",
            Method::ExMcp6 => "exmcp6",
            Method::Median => "median",
            Method::Q090 => "q0.9",
            Method::Q099 => "q0.99",
            Method::Q0999 => "q0.999",
            Method::Threshold => "threshold",
        }
    }

    /// `(gamma, family)` for the power-loss methods.
    fn power_loss(&self) -> Option<(u32, PenaltyFamily)> {
        Some(match self {
            Method::ExLasso4 => (4, PenaltyFamily::L1),
            Method::ExLasso6 => (6, PenaltyFamily::L1),
            Method::Lasso => (2, PenaltyFamily::L1),
            Method::Scad => (2, PenaltyFamily::Scad),
            Method::Mcp => (2, PenaltyFamily::Mcp),
            Method::ExScad4 => (4, PenaltyFamily::Scad),
            Method::ExScad6 => (6, PenaltyFamily::Scad),
            Method::ExMcp4 => (4, PenaltyFamily::Mcp),
            Method::ExMcp6 => (6, PenaltyFamily::Mcp),
            _ => return None,
        })
    }

    fn quantile(&self) -> Option<f64> {
        match self {
            Method::Median => Some(0.5),
            Method::Q090 => Some(0.9),
            Method::Q099 => Some(0.99),
            Method::Q0999 => Some(0.999),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .find(|m| m.name() == s)
            .copied()
            .ok_or_else(|| Error::InvalidSpec(format!("unknown method `{s}`")))
    }
}

/// Oracle-tuned paths stop once the support passes this multiple of the
/// target size; later entries cannot be closer to the target.
const PATH_OVERSHOOT: usize = 3;

/// Fits `method` on a raw simulated dataset along a default-length path and
/// returns the oracle-sparsity pick for support size `target`.
pub fn run_method(method: Method, raw: &Dataset, target: usize) -> Result<Coefficients> {
    let stop = PATH_OVERSHOOT * target.max(1);
    if let Some((gamma, family)) = method.power_loss() {
        let data = standardize(raw)?;
        let lambdas = default_lambda_grid(&data, gamma)?;
        let cfg = FitConfig::new(gamma, PenaltySpec::new(family, 0.0));
        let path = fit_path_until(&data, &cfg, &lambdas, stop)?;
        return Ok(oracle_sparsity_select(&path, target)?.coefficients.clone());
    }
    if let Some(tau_q) = method.quantile() {
        let data = standardize(raw)?;
        let lmax = quantile_lambda_max(&data, tau_q);
        let lambdas = lambda_grid(lmax, DEFAULT_PATH_LENGTH, DEFAULT_PATH_MIN_RATIO);
        let path = fit_quantile_path(&data, &QuantileConfig::new(tau_q, lmax), &lambdas, stop)?;
        return Ok(oracle_sparsity_select(&path, target)?.coefficients.clone());
    }
    let cfg = ThresholdConfig {
        target_support: target,
        ..ThresholdConfig::default()
    };
    match threshold_restrict(raw, &cfg)? {
        None => Ok(Coefficients::zeros(raw.n_features())),
        Some((_, sub)) => {
            let lambdas = default_lambda_grid(&sub, 2)?;
            let path = fit_path_until(&sub, &FitConfig::new(2, PenaltySpec::l1(0.0)), &lambdas, stop)?;
            Ok(oracle_sparsity_select(&path, target)?.coefficients.clone())
        }
    }
}

/// The scenario parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Tau,
    Events,
    GammaRate,
    P,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Tau => "tau",
            SweepAxis::Events => "events",
            SweepAxis::GammaRate => "gamma_rate",
            SweepAxis::P => "p",
        }
    }

    pub fn apply(&self, base: &ScenarioSpec, value: f64) -> Result<ScenarioSpec> {
        let mut spec = base.clone();
        let count = || -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::InvalidSpec(format!("{} needs a positive integer, got {value}", self.name())))
            }
        };
        match self {
            SweepAxis::Tau => spec.tau = value,
            SweepAxis::Events => spec.events = count()?,
            SweepAxis::GammaRate => spec.gamma_rate = value,
            SweepAxis::P => spec.p = count()?,
        }
        Ok(spec)
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tau" => Ok(SweepAxis::Tau),
            "events" => Ok(SweepAxis::Events),
            "gamma_rate" | "rate" => Ok(SweepAxis::GammaRate),
            "p" => Ok(SweepAxis::P),
            other => Err(Error::InvalidSpec(format!("unknown axis `{other}`"))),
        }
    }
}

/// Axis and values of the four preset scenarios of each model.
pub fn scenario_preset(model: ScenarioModel, scenario: u8) -> Result<(SweepAxis, Vec<f64>)> {
    Ok(match (model, scenario) {
        (ScenarioModel::Linear, 1) => (SweepAxis::Tau, vec![6.0, 7.0, 11.0, 15.0]),
        (ScenarioModel::Mixture, 1) => (SweepAxis::Tau, vec![6.0, 7.0, 9.0, 50.0]),
        (_, 2) => (SweepAxis::Events, vec![1.0, 2.0, 3.0, 4.0]),
        (ScenarioModel::Linear, 3) => (SweepAxis::GammaRate, vec![0.33, 0.2, 0.125, 0.083]),
        (ScenarioModel::Mixture, 3) => (SweepAxis::GammaRate, vec![0.33, 0.2, 0.166, 0.125]),
        (_, 4) => (SweepAxis::P, vec![750.0, 1500.0, 2250.0, 3000.0]),
        (_, k) => return Err(Error::InvalidSpec(format!("scenario must be 1..=4, got {k}"))),
    })
}

/// Score of one method on one replicate of one axis value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateScore {
    pub method: Method,
    pub axis_value: f64,
    pub replicate: usize,
    pub metrics: MetricReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub axis_value: f64,
    pub f1: Summary,
    pub tpr: Summary,
    pub fpr: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: Method,
    pub cells: Vec<SweepCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub replicates: usize,
    pub rows: Vec<SweepRow>,
    #[serde(skip)]
    pub scores: Vec<ReplicateScore>,
}

fn summarize(v: &[f64]) -> Summary {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() < 2 {
        0.0
    } else {
        (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Summary { mean, sd }
}

/// Every axis value times every method times every replicate. Replicate
/// `r` uses seed `base.seed + r`, shared by all methods and axis values.
pub fn run_scenario_sweep(
    base: &ScenarioSpec,
    axis: SweepAxis,
    values: &[f64],
    methods: &[Method],
    replicates: usize,
) -> Result<SweepTable> {
    if values.is_empty() || methods.is_empty() {
        return Err(Error::InvalidSpec("a sweep needs at least one value and one method".into()));
    }
    if replicates == 0 {
        return Err(Error::InvalidSpec("replicates must be at least 1".into()));
    }
    let specs: Vec<ScenarioSpec> = values.iter().map(|&v| axis.apply(base, v)).collect::<Result<_>>()?;
    for s in &specs {
        s.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|v| (0..replicates).map(move |r| (v, r)))
        .collect();
    let per_job: Vec<Vec<ReplicateScore>> = jobs
        .par_iter()
        .map(|&(v, r)| {
            let spec = specs[v].clone().with_seed(base.seed.wrapping_add(r as u64));
            let (raw, truth) = generate(&spec)?;
            let target = truth.true_support.len();
            methods
                .par_iter()
                .map(|&m| {
                    let coef = run_method(m, &raw, target)?;
                    Ok(ReplicateScore {
                        method: m,
                        axis_value: values[v],
                        replicate: r,
                        metrics: score_support(&coef, &truth),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let scores: Vec<ReplicateScore> = per_job.into_iter().flatten().collect();

    let rows = methods
        .iter()
        .map(|&m| SweepRow {
            method: m,
            cells: values
                .iter()
                .map(|&v| {
                    let pick = |f: fn(&MetricReport) -> f64| -> Vec<f64> {
                        scores
                            .iter()
                            .filter(|s| s.method == m && s.axis_value == v)
                            .map(|s| f(&s.metrics))
                            .collect()
                    };
                    SweepCell {
                        axis_value: v,
                        f1: summarize(&pick(|r| r.f1)),
                        tpr: summarize(&pick(|r| r.tpr)),
                        fpr: summarize(&pick(|r| r.fpr)),
                    }
                })
                .collect(),
        })
        .collect();
    Ok(SweepTable {
        axis,
        values: values.to_vec(),
        replicates,
        rows,
        scores,
    })
}

/// `x` to four significant digits, without trailing zeros.
pub fn format_sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = 3 - x.abs().log10().floor() as i32;
    let s = if digits > 0 {
        format!("{:.*}", digits as usize, x)
    } else {
        let m = 10f64.powi(-digits);
        format!("{}", (x / m).round() * m)
    };
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

impl SweepTable {
    pub fn row(&self, method: Method) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// Mean F-1 of `method` at `value`.
    pub fn mean_f1(&self, method: Method, value: f64) -> Option<f64> {
        self.row(method)?
            .cells
            .iter()
            .find(|c| c.axis_value == value)
            .map(|c| c.f1.mean)
    }

    /// F-1 table: one row per method, one `mean (sd)` column per value.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["method".to_string()];
        header.extend(self.values.iter().map(|v| format!("{}={}", self.axis.name(), format_sig4(*v))));
        w.write_record(&header).map_err(csv_err)?;
        for row in &self.rows {
            let mut rec = vec![row.method.name().to_string()];
            rec.extend(
                row.cells
                    .iter()
                    .map(|c| format!("{} ({})", format_sig4(c.f1.mean), format_sig4(c.f1.sd))),
            );
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<table>".into(),
            source: e,
        })
    }

    /// One line per method, axis value and replicate.
    pub fn write_long_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "axis_value", "replicate", "f1", "tpr", "fpr", "support_size"])
            .map_err(csv_err)?;
        for s in &self.scores {
            w.write_record([
                s.method.name().to_string(),
                format!("{}", s.axis_value),
                s.replicate.to_string(),
                format!("{}", s.metrics.f1),
                format!("{}", s.metrics.tpr),
                format!("{}", s.metrics.fpr),
                s.metrics.support_size.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<long table>".into(),
            source: e,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io {
        path: "<csv>".into(),
        source: std::io::Error::other(e.to_string()),
    }
}
