//! Proximal gradient descent with backtracking for the penalized power loss,
//! plus warm-started regularization paths.
//!
//! Each outer iteration resets the step to 1, computes the gradient of the
//! smooth part once, then shrinks the step by `alpha` until the candidate
//! `z = prox(beta - t grad, t lambda)` satisfies
//! `g(z) <= g(beta) + grad^T (z - beta) + ||z - beta||^2 / (2t)`.
//! The loop stops once `(1/N) ||beta_new - beta_old||_1 < delta`.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::Serialize;

use crate::data::{Coefficients, Dataset};
use crate::error::{Error, Result};
use crate::loss::{self, GammaLoss};
use crate::penalty::PenaltySpec;

pub const DEFAULT_DELTA: f64 = 1e-7;
pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_MAX_ITERS: usize = 10_000;
pub const DEFAULT_PATH_LENGTH: usize = 50;
pub const DEFAULT_PATH_MIN_RATIO: f64 = 1e-3;

/// Smallest step tried before giving up on sufficient decrease.
const MIN_STEP: f64 = 1e-20;
/// Residuals are recomputed from scratch this often to stop drift.
const RESIDUAL_REFRESH: usize = 64;

/// A smooth data-fit term expressed through the residuals `r = y - X beta - b0`.
pub trait Datafit {
    fn value(&self, r: ArrayView1<'_, f64>) -> Result<f64>;
    /// `d value / d r_i`, written into `out`.
    fn derivative(&self, r: ArrayView1<'_, f64>, out: &mut [f64]) -> Result<()>;
    /// `value(r_new) - value(r)`. Implementations may compute it more
    /// accurately than the plain difference.
    fn change(&self, r: ArrayView1<'_, f64>, r_new: ArrayView1<'_, f64>) -> Result<f64> {
        Ok(self.value(r_new)? - self.value(r)?)
    }
}

impl Datafit for GammaLoss {
    fn value(&self, r: ArrayView1<'_, f64>) -> Result<f64> {
        self.value_from_residuals(r)
    }

    fn derivative(&self, r: ArrayView1<'_, f64>, out: &mut [f64]) -> Result<()> {
        self.residual_derivative(r, out)
    }

    fn change(&self, r: ArrayView1<'_, f64>, r_new: ArrayView1<'_, f64>) -> Result<f64> {
        self.value_change(r, r_new)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitConfig {
    pub gamma: u32,
    pub penalty: PenaltySpec,
    pub delta: f64,
    pub alpha: f64,
    pub max_iters: usize,
    #[serde(skip)]
    pub initial_beta: Option<Array1<f64>>,
}

impl FitConfig {
    pub fn new(gamma: u32, penalty: PenaltySpec) -> Self {
        Self {
            gamma,
            penalty,
            delta: DEFAULT_DELTA,
            alpha: DEFAULT_ALPHA,
            max_iters: DEFAULT_MAX_ITERS,
            initial_beta: None,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.penalty.lambda = lambda;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_initial_beta(mut self, beta: Array1<f64>) -> Self {
        self.initial_beta = Some(beta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        loss::check_gamma(self.gamma)?;
        self.penalty.validate()?;
        check_engine_params(self.delta, self.alpha, self.max_iters)
    }
}

pub(crate) fn check_engine_params(delta: f64, alpha: f64, max_iters: usize) -> Result<()> {
    if !(delta > 0.0) {
        return Err(Error::InvalidConfig(format!("delta must be positive, got {delta}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub coefficients: Coefficients,
    pub lambda: f64,
    pub iterations: usize,
    /// Penalized objective at the starting point and after every accepted step.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub final_step: f64,
}

impl FitResult {
    pub fn support_size(&self) -> usize {
        self.coefficients.support().len()
    }

    pub(crate) fn empty(p: usize, lambda: f64) -> Self {
        Self {
            coefficients: Coefficients::zeros(p),
            lambda,
            iterations: 0,
            objective_trace: Vec::new(),
            converged: false,
            final_step: 0.0,
        }
    }
}

pub(crate) struct EngineOptions {
    pub delta: f64,
    pub alpha: f64,
    pub max_iters: usize,
    pub fit_intercept: bool,
}

/// Core loop shared by the power-loss solver and the smoothed quantile
/// baseline. The intercept, when fitted, is an unpenalized coordinate.
pub(crate) fn proximal_gradient<D: Datafit>(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    datafit: &D,
    penalty: &PenaltySpec,
    opts: &EngineOptions,
    beta0: Array1<f64>,
    intercept0: f64,
) -> Result<FitResult> {
    let (n, p) = x.dim();
    if beta0.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: beta0.len(),
        });
    }
    let nf = n as f64;
    let lambda = penalty.lambda;

    let mut beta = beta0;
    let mut b0 = if opts.fit_intercept { intercept0 } else { 0.0 };
    let mut r = full_residuals(x, y, beta.view(), b0);

    let mut w = vec![0.0; n];
    let mut grad = Array1::<f64>::zeros(p);
    let mut z = Array1::<f64>::zeros(p);
    let mut r_z = Array1::<f64>::zeros(n);
    let mut changed: Vec<usize> = Vec::with_capacity(p);

    let mut g_beta = datafit.value(r.view())?;
    let mut trace = vec![g_beta + penalty.value(beta.view())];
    let mut converged = false;
    let mut final_step = 1.0;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        datafit.derivative(r.view(), &mut w)?;
        let wv = ArrayView1::from(&w[..]);
        for (j, g) in grad.iter_mut().enumerate() {
            *g = -x.column(j).dot(&wv);
        }
        let grad_b0 = if opts.fit_intercept { -wv.sum() } else { 0.0 };

        let mut t = 1.0;
        let (g_z, zb0) = loop {
            changed.clear();
            let mut lin = 0.0;
            let mut sq = 0.0;
            for j in 0..p {
                let zj = penalty.prox_scalar(beta[j] - t * grad[j], t);
                z[j] = zj;
                let d = zj - beta[j];
                if d != 0.0 {
                    changed.push(j);
                    lin += grad[j] * d;
                    sq += d * d;
                }
            }
            let zb0 = b0 - t * grad_b0;
            let db0 = zb0 - b0;
            lin += grad_b0 * db0;
            sq += db0 * db0;

            r_z.assign(&r);
            for &j in &changed {
                r_z.scaled_add(-(z[j] - beta[j]), &x.column(j));
            }
            if db0 != 0.0 {
                r_z -= db0;
            }

            // an overflowing candidate just means the step is too long
            let diff = match datafit.change(r.view(), r_z.view()) {
                Ok(v) => v,
                Err(Error::ResidualOverflow(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            let model = lin + sq / (2.0 * t);
            if diff <= model + 1e-12 * (lin.abs() + sq / (2.0 * t)) {
                break (datafit.value(r_z.view())?, zb0);
            }
            t *= opts.alpha;
            if t < MIN_STEP {
                return Err(Error::StepUnderflow);
            }
        };

        let mut change = (zb0 - b0).abs();
        for &j in &changed {
            change += (z[j] - beta[j]).abs();
        }
        std::mem::swap(&mut beta, &mut z);
        b0 = zb0;
        iterations += 1;
        final_step = t;

        if iterations % RESIDUAL_REFRESH == 0 {
            r = full_residuals(x, y, beta.view(), b0);
            g_beta = datafit.value(r.view())?;
        } else {
            std::mem::swap(&mut r, &mut r_z);
            g_beta = g_z;
        }
        trace.push(g_beta + penalty.value(beta.view()));

        if change / nf < opts.delta {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        coefficients: Coefficients::with_intercept(beta, b0),
        lambda,
        iterations,
        objective_trace: trace,
        converged,
        final_step,
    })
}

fn full_residuals(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, beta: ArrayView1<'_, f64>, b0: f64) -> Array1<f64> {
    let mut r = y.to_owned();
    for (j, &bj) in beta.iter().enumerate() {
        if bj != 0.0 {
            r.scaled_add(-bj, &x.column(j));
        }
    }
    if b0 != 0.0 {
        r -= b0;
    }
    r
}

/// Fits the penalized power-loss model on standardized data.
pub fn fit(data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    if !data.is_standardized() {
        return Err(Error::NotStandardized);
    }
    fit_arrays(data.x(), data.y(), config)
}

/// Same as [`fit`] without the standardization check, for callers that
/// manage scaling themselves (e.g. contamination experiments).
pub fn fit_arrays(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: y.len(),
        });
    }
    let loss = GammaLoss::new(config.gamma)?;
    let beta0 = config
        .initial_beta
        .clone()
        .unwrap_or_else(|| Array1::zeros(x.ncols()));
    let opts = EngineOptions {
        delta: config.delta,
        alpha: config.alpha,
        max_iters: config.max_iters,
        fit_intercept: false,
    };
    proximal_gradient(x, y, &loss, &config.penalty, &opts, beta0, 0.0)
}

/// `||grad loss(0)||_inf` under the scaled convention: the smallest L1
/// penalty for which the zero vector is optimal.
pub fn lambda_max(data: &Dataset, gamma: u32) -> Result<f64> {
    lambda_max_arrays(data.x(), data.y(), gamma)
}

pub(crate) fn lambda_max_arrays(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, gamma: u32) -> Result<f64> {
    let loss = GammaLoss::new(gamma)?;
    let mut w = vec![0.0; y.len()];
    loss.residual_derivative(y, &mut w)?;
    let wv = ArrayView1::from(&w[..]);
    Ok(x.columns()
        .into_iter()
        .map(|c| c.dot(&wv).abs())
        .fold(0.0, f64::max))
}

/// `count` log-spaced values from `lambda_max` down to `min_ratio * lambda_max`.
pub fn lambda_grid(lambda_max: f64, count: usize, min_ratio: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lambda_max],
        _ => {
            let step = min_ratio.ln() / (count - 1) as f64;
            (0..count).map(|k| lambda_max * (step * k as f64).exp()).collect()
        }
    }
}

/// The default 50-point grid down to `1e-3 lambda_max`.
pub fn default_lambda_grid(data: &Dataset, gamma: u32) -> Result<Vec<f64>> {
    Ok(lambda_grid(lambda_max(data, gamma)?, DEFAULT_PATH_LENGTH, DEFAULT_PATH_MIN_RATIO))
}

fn check_grid(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::EmptyLambdaGrid);
    }
    if lambdas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidConfig("lambda grid must be strictly decreasing".into()));
    }
    if lambdas.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::InvalidConfig("lambda grid must be non-negative".into()));
    }
    Ok(())
}

/// Fits every lambda in turn, warm-starting from the previous solution.
pub fn fit_path(data: &Dataset, config: &FitConfig, lambdas: &[f64]) -> Result<Vec<FitResult>> {
    fit_path_until(data, config, lambdas, usize::MAX)
}

/// Like [`fit_path`] but stops after the first solution whose support
/// exceeds `max_support`; the returned list is a prefix of the full path.
pub fn fit_path_until(
    data: &Dataset,
    config: &FitConfig,
    lambdas: &[f64],
    max_support: usize,
) -> Result<Vec<FitResult>> {
    check_grid(lambdas)?;
    if !data.is_standardized() {
        return Err(Error::NotStandardized);
    }
    let mut cfg = config.clone();
    let mut out = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        cfg.penalty.lambda = lam;
        let res = fit(data, &cfg)?;
        cfg.initial_beta = Some(res.coefficients.beta().to_owned());
        let stop = res.support_size() > max_support;
        out.push(res);
        if stop {
            break;
        }
    }
    Ok(out)
}

/// Penalized objective `loss + penalty` under the solver's scaling.
pub fn objective(data: &Dataset, config: &FitConfig, coef: &Coefficients) -> Result<f64> {
    let loss = GammaLoss::new(config.gamma)?;
    Ok(loss.value(data, coef)? + config.penalty.value(coef.beta()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::standardize;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn instance(seed: u64, n: usize, p: usize, k: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng));
        let mut y = Array1::from_shape_fn(n, |_| { let v: f64 = StandardNormal.sample(&mut rng); 0.5 * v });
        for j in 0..k.min(p) {
            y.scaled_add(1.0 - 0.3 * j as f64, &x.column(j));
        }
        standardize(&Dataset::new(x, y).unwrap()).unwrap()
    }

    #[test]
    fn unstandardized_data_is_rejected() {
        let d = instance(1, 10, 2, 1);
        let raw = Dataset::new(d.x().to_owned(), d.y().to_owned()).unwrap();
        let cfg = FitConfig::new(2, PenaltySpec::l1(0.1));
        assert!(matches!(fit(&raw, &cfg), Err(Error::NotStandardized)));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let d = instance(1, 10, 2, 1);
        let mut cfg = FitConfig::new(2, PenaltySpec::l1(0.1));
        cfg.alpha = 1.0;
        assert!(matches!(fit(&d, &cfg), Err(Error::InvalidConfig(_))));
        let cfg = FitConfig::new(3, PenaltySpec::l1(0.1));
        assert!(matches!(fit(&d, &cfg), Err(Error::InvalidConfig(_))));
        let cfg = FitConfig::new(2, PenaltySpec::l1(-1.0));
        assert!(matches!(fit(&d, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn lambda_above_max_gives_zero_in_one_iteration() {
        for gamma in [2, 4, 6] {
            let d = instance(4, 40, 6, 3);
            let lmax = lambda_max(&d, gamma).unwrap();
            let res = fit(&d, &FitConfig::new(gamma, PenaltySpec::l1(lmax))).unwrap();
            assert_eq!(res.iterations, 1);
            assert!(res.converged);
            assert!(res.coefficients.support().is_empty());
        }
    }

    #[test]
    fn lambda_max_for_gamma_two_is_classical() {
        let d = instance(5, 30, 5, 2);
        let classical = d
            .x()
            .t()
            .dot(&d.y())
            .iter()
            .map(|v| v.abs() / 30.0)
            .fold(0.0, f64::max);
        assert!((lambda_max(&d, 2).unwrap() - classical).abs() < 1e-14);
    }

    #[test]
    fn lambda_max_of_zero_response_is_zero() {
        let d = instance(5, 30, 5, 2);
        let z = Dataset::new(d.x().to_owned(), Array1::zeros(30)).unwrap();
        assert_eq!(lambda_max(&z, 4).unwrap(), 0.0);
    }

    #[test]
    fn lambda_max_brackets_the_empty_support() {
        let d = instance(6, 60, 8, 3);
        let lmax = lambda_max(&d, 4).unwrap();
        let above = fit(&d, &FitConfig::new(4, PenaltySpec::l1(1.01 * lmax))).unwrap();
        let below = fit(&d, &FitConfig::new(4, PenaltySpec::l1(0.95 * lmax))).unwrap();
        assert!(above.coefficients.support().is_empty());
        assert!(!below.coefficients.support().is_empty());
    }

    #[test]
    fn unpenalized_gamma_four_is_stationary() {
        let d = instance(7, 30, 3, 3);
        let cfg = FitConfig::new(4, PenaltySpec::none()).with_delta(1e-12).with_max_iters(200_000);
        let res = fit(&d, &cfg).unwrap();
        let g = GammaLoss::new(4).unwrap().gradient(&d, &res.coefficients).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-6), "{g}");
    }

    #[test]
    fn objective_trace_is_monotone_for_every_family() {
        use crate::penalty::PenaltyFamily::*;
        for gamma in [2, 4, 6, 8] {
            for fam in [L1, Scad, Mcp, None] {
                let d = instance(10 + u64::from(gamma), 40, 6, 3);
                let lam = 0.2 * lambda_max(&d, gamma).unwrap();
                let res = fit(&d, &FitConfig::new(gamma, PenaltySpec::new(fam, lam))).unwrap();
                for w in res.objective_trace.windows(2) {
                    assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()), "{gamma} {fam:?}");
                }
            }
        }
    }

    #[test]
    fn fits_are_deterministic() {
        let d = instance(12, 50, 10, 4);
        let cfg = FitConfig::new(6, PenaltySpec::l1(0.05));
        let a = fit(&d, &cfg).unwrap();
        let b = fit(&d, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn max_iters_returns_unconverged_result() {
        let d = instance(13, 50, 10, 4);
        let cfg = FitConfig::new(4, PenaltySpec::l1(1e-4)).with_max_iters(3);
        let res = fit(&d, &cfg).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 3);
    }

    #[test]
    fn path_validation() {
        let d = instance(14, 20, 3, 1);
        let cfg = FitConfig::new(2, PenaltySpec::l1(0.0));
        assert!(matches!(fit_path(&d, &cfg, &[]), Err(Error::EmptyLambdaGrid)));
        assert!(fit_path(&d, &cfg, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn path_starts_empty_and_singleton_matches_fit() {
        let d = instance(15, 60, 8, 3);
        let lmax = lambda_max(&d, 4).unwrap();
        let cfg = FitConfig::new(4, PenaltySpec::l1(0.0));
        let path = fit_path(&d, &cfg, &[lmax, lmax / 2.0]).unwrap();
        assert_eq!(path.len(), 2);
        assert!(path[0].coefficients.support().is_empty());

        let single = fit_path(&d, &cfg, &[0.3 * lmax]).unwrap();
        let direct = fit(&d, &cfg.clone().with_lambda(0.3 * lmax)).unwrap();
        assert_eq!(single[0], direct);
    }

    #[test]
    fn truncated_path_is_prefix() {
        let d = instance(16, 60, 12, 6);
        let cfg = FitConfig::new(2, PenaltySpec::l1(0.0));
        let grid = default_lambda_grid(&d, 2).unwrap();
        let full = fit_path(&d, &cfg, &grid).unwrap();
        let part = fit_path_until(&d, &cfg, &grid, 3).unwrap();
        assert!(part.len() < full.len());
        assert!(part.last().unwrap().support_size() > 3);
        assert_eq!(part[..], full[..part.len()]);
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = lambda_grid(2.0, 50, 1e-3);
        assert_eq!(g.len(), 50);
        assert!((g[0] - 2.0).abs() < 1e-15);
        assert!((g[49] - 2e-3).abs() < 1e-15);
        let r = g[1] / g[0];
        assert!(g.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-12));
    }
}
