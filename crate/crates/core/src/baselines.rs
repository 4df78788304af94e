//! Comparator methods: smoothed L1 quantile regression and CUSUM
//! thresholding followed by the Lasso.

use ndarray::{Array1, ArrayView1, Axis};
use serde::Serialize;

use crate::data::{standardize, Dataset};
use crate::error::{Error, Result};
use crate::penalty::{PenaltyFamily, PenaltySpec};
use crate::solver::{
    check_engine_params, fit, proximal_gradient, Datafit, EngineOptions, FitConfig, FitResult, DEFAULT_ALPHA,
    DEFAULT_DELTA, DEFAULT_MAX_ITERS,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileConfig {
    pub tau_q: f64,
    pub lambda: f64,
    /// Half-width of the quadratic zone around zero.
    pub smoothing: f64,
    pub delta: f64,
    pub alpha: f64,
    pub max_iters: usize,
}

impl QuantileConfig {
    pub fn new(tau_q: f64, lambda: f64) -> Self {
        Self {
            tau_q,
            lambda,
            smoothing: 1e-4,
            delta: DEFAULT_DELTA,
            alpha: DEFAULT_ALPHA,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }

    pub fn with_smoothing(mut self, smoothing: f64) -> Self {
        self.smoothing = smoothing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_q > 0.0 && self.tau_q < 1.0) {
            return Err(Error::InvalidConfig(format!("tau_q must lie in (0, 1), got {}", self.tau_q)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if !(self.smoothing > 0.0) {
            return Err(Error::InvalidConfig(format!("smoothing must be positive, got {}", self.smoothing)));
        }
        check_engine_params(self.delta, self.alpha, self.max_iters)
    }
}

/// Pinball loss `rho_tau`, with the kink replaced by a parabola on
/// `[-h, h]` that matches value and slope at both ends.
#[derive(Debug, Clone, Copy)]
pub struct SmoothedPinball {
    pub tau_q: f64,
    pub h: f64,
}

impl SmoothedPinball {
    pub fn rho(&self, r: f64) -> f64 {
        if r > self.h {
            self.tau_q * r
        } else if r < -self.h {
            (self.tau_q - 1.0) * r
        } else {
            r * r / (4.0 * self.h) + (self.tau_q - 0.5) * r + self.h / 4.0
        }
    }

    pub fn psi(&self, r: f64) -> f64 {
        if r > self.h {
            self.tau_q
        } else if r < -self.h {
            self.tau_q - 1.0
        } else {
            r / (2.0 * self.h) + self.tau_q - 0.5
        }
    }
}

/// Unsmoothed pinball loss.
pub fn pinball(tau_q: f64, r: f64) -> f64 {
    if r >= 0.0 {
        tau_q * r
    } else {
        (tau_q - 1.0) * r
    }
}

impl Datafit for SmoothedPinball {
    fn value(&self, r: ArrayView1<'_, f64>) -> Result<f64> {
        Ok(r.iter().map(|&v| self.rho(v)).sum::<f64>() / r.len() as f64)
    }

    fn derivative(&self, r: ArrayView1<'_, f64>, out: &mut [f64]) -> Result<()> {
        let nf = r.len() as f64;
        for (o, &v) in out.iter_mut().zip(r) {
            *o = self.psi(v) / nf;
        }
        Ok(())
    }
}

/// Empirical `tau_q` quantile (inverse of the empirical CDF).
pub fn empirical_quantile(v: ArrayView1<'_, f64>, tau_q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = ((tau_q * s.len() as f64).ceil() as usize).clamp(1, s.len());
    s[k - 1]
}

/// Smallest L1 penalty for which the intercept-only fit is optimal.
pub fn quantile_lambda_max(data: &Dataset, tau_q: f64) -> f64 {
    let q = empirical_quantile(data.y(), tau_q);
    let psi = data.y().mapv(|v| pinball_slope(tau_q, v - q));
    let nf = data.n_samples() as f64;
    data.x()
        .columns()
        .into_iter()
        .map(|c| (c.dot(&psi) / nf).abs())
        .fold(0.0, f64::max)
}

fn pinball_slope(tau_q: f64, r: f64) -> f64 {
    if r > 0.0 {
        tau_q
    } else if r < 0.0 {
        tau_q - 1.0
    } else {
        0.0
    }
}

/// Widest smoothing used to start the continuation.
const SMOOTHING_START: f64 = 1.0;

fn quantile_stage(
    data: &Dataset,
    cfg: &QuantileConfig,
    beta: Array1<f64>,
    b0: f64,
    continuation: bool,
) -> Result<FitResult> {
    let opts = EngineOptions {
        delta: cfg.delta,
        alpha: cfg.alpha,
        max_iters: cfg.max_iters,
        fit_intercept: true,
    };
    let penalty = PenaltySpec::new(PenaltyFamily::L1, cfg.lambda);
    let mut widths = Vec::new();
    if continuation {
        let mut h = SMOOTHING_START.max(cfg.smoothing);
        while h > cfg.smoothing {
            widths.push(h);
            h /= 10.0;
        }
    }
    widths.push(cfg.smoothing);
    let (mut beta, mut b0) = (beta, b0);
    let mut last = None;
    for h in widths {
        let loss = SmoothedPinball { tau_q: cfg.tau_q, h };
        let res = proximal_gradient(data.x(), data.y(), &loss, &penalty, &opts, beta, b0)?;
        beta = res.coefficients.beta().to_owned();
        b0 = res.coefficients.intercept();
        last = Some(res);
    }
    Ok(last.expect("at least one smoothing stage"))
}

/// Penalized smoothed quantile regression with an unpenalized intercept,
/// `(1/N) sum rho_tau(y_i - b0 - x_i^T beta) + lambda ||beta||_1`.
/// The smoothing width is driven down from 1 to `cfg.smoothing` by factors
/// of ten, warm-starting each stage.
pub fn fit_quantile(data: &Dataset, cfg: &QuantileConfig) -> Result<FitResult> {
    if !data.is_standardized() {
        return Err(Error::NotStandardized);
    }
    cfg.validate()?;
    let b0 = empirical_quantile(data.y(), cfg.tau_q);
    quantile_stage(data, cfg, Array1::zeros(data.n_features()), b0, true)
}

/// Warm-started quantile path; only the first point runs the full
/// smoothing continuation.
pub fn fit_quantile_path(data: &Dataset, cfg: &QuantileConfig, lambdas: &[f64], max_support: usize) -> Result<Vec<FitResult>> {
    if !data.is_standardized() {
        return Err(Error::NotStandardized);
    }
    if lambdas.is_empty() {
        return Err(Error::EmptyLambdaGrid);
    }
    let mut cfg = cfg.clone();
    let mut beta = Array1::zeros(data.n_features());
    let mut b0 = empirical_quantile(data.y(), cfg.tau_q);
    let mut out = Vec::with_capacity(lambdas.len());
    for (k, &lam) in lambdas.iter().enumerate() {
        cfg.lambda = lam;
        cfg.validate()?;
        let res = quantile_stage(data, &cfg, beta, b0, k == 0)?;
        beta = res.coefficients.beta().to_owned();
        b0 = res.coefficients.intercept();
        let stop = res.support_size() > max_support;
        out.push(res);
        if stop {
            break;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdConfig {
    /// CUSUM reference value `k`, in SD units.
    pub drift: f64,
    /// CUSUM decision value `h`, in SD units.
    pub threshold: f64,
    /// Number of past unflagged points used for the baseline mean and SD.
    pub adaptive_window: usize,
    /// Expected support size; fewer than `max(10, 2 target)` flagged rows
    /// makes the follow-up Lasso give up.
    pub target_support: usize,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            drift: 0.5,
            threshold: 5.0,
            adaptive_window: 100,
            target_support: 10,
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.drift >= 0.0) || !(self.threshold > 0.0) {
            return Err(Error::InvalidConfig("drift must be >= 0 and threshold > 0".into()));
        }
        if self.adaptive_window < 10 {
            return Err(Error::InvalidConfig(format!(
                "adaptive_window must be at least 10, got {}",
                self.adaptive_window
            )));
        }
        Ok(())
    }

    pub fn min_flagged(&self) -> usize {
        10.max(2 * self.target_support)
    }
}

fn window_stats(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = vals.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, (ss / (n - 1.0).max(1.0)).sqrt())
}

/// One-sided upper CUSUM on rolling z-scores. The baseline of point `i` is
/// the mean and SD of the last `adaptive_window` unflagged points before it;
/// the first `adaptive_window` points are scored against the other points
/// of the opening window. The statistic resets after every flag.
pub fn cusum_threshold(series: ArrayView1<'_, f64>, cfg: &ThresholdConfig) -> Result<Vec<bool>> {
    cfg.validate()?;
    let w = cfg.adaptive_window;
    if series.len() < w {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            window: w,
        });
    }
    let mut flags = vec![false; series.len()];
    let mut baseline: std::collections::VecDeque<f64> = series.iter().take(w).copied().collect();
    let mut s = 0.0;
    for i in 0..series.len() {
        let (mean, sd) = if i < w {
            window_stats(series.iter().take(w).enumerate().filter(|(k, _)| *k != i).map(|(_, v)| *v))
        } else {
            window_stats(baseline.iter().copied())
        };
        let dev = series[i] - mean;
        let z = if sd > 0.0 {
            dev / sd
        } else if dev > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        s = (s + z - cfg.drift).max(0.0);
        if s > cfg.threshold {
            flags[i] = true;
            s = 0.0;
        } else if i >= w {
            baseline.pop_front();
            baseline.push_back(series[i]);
        }
    }
    Ok(flags)
}

/// Rows flagged by [`cusum_threshold`] on the response, re-standardized, or
/// `None` when too few rows survive.
pub fn threshold_restrict(data: &Dataset, cfg: &ThresholdConfig) -> Result<Option<(Vec<usize>, Dataset)>> {
    let flags = cusum_threshold(data.y(), cfg)?;
    let rows: Vec<usize> = (0..flags.len()).filter(|&i| flags[i]).collect();
    if rows.len() < cfg.min_flagged() {
        return Ok(None);
    }
    let raw = Dataset::new(data.x().select(Axis(0), &rows), data.y().select(Axis(0), &rows))?;
    Ok(Some((rows, standardize(&raw)?)))
}

/// CUSUM thresholding on the response followed by the Lasso on the
/// flagged rows. Coefficients are reported on the scale of `data`.
pub fn threshold_then_lasso(data: &Dataset, cfg: &ThresholdConfig, fit_cfg: &FitConfig) -> Result<FitResult> {
    if fit_cfg.gamma != 2 {
        return Err(Error::InvalidConfig(format!(
            "threshold_then_lasso fits the Lasso (gamma = 2), got gamma = {}",
            fit_cfg.gamma
        )));
    }
    fit_cfg.validate()?;
    match threshold_restrict(data, cfg)? {
        None => Ok(FitResult::empty(data.n_features(), fit_cfg.penalty.lambda)),
        Some((_, sub)) => {
            let mut res = fit(&sub, fit_cfg)?;
            res.coefficients = sub.to_raw_scale(&res.coefficients);
            Ok(res)
        }
    }
}
