//! Choosing `lambda` by k-fold cross-validation, `gamma` by stability
//! selection, and a path entry by oracle sparsity.

use ndarray::{Array1, ArrayView1, Axis};
use rand::seq::{index::sample, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{standardize, Dataset};
use crate::error::{Error, Result};
use crate::loss::{check_gamma, ipow};
use crate::penalty::PenaltySpec;
use crate::solver::{fit, fit_path, lambda_max, FitConfig, FitResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CvScoring {
    /// Mean held-out `|r|^gamma`.
    GammaLoss,
    /// Mean held-out `r^2`.
    SquaredLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub lambda_grid: Vec<f64>,
    pub scoring: CvScoring,
}

impl CvConfig {
    pub fn new(lambda_grid: Vec<f64>) -> Self {
        Self {
            folds: 5,
            seed: 0,
            lambda_grid,
            scoring: CvScoring::GammaLoss,
        }
    }

    pub fn with_folds(mut self, folds: usize) -> Self {
        self.folds = folds;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_scoring(mut self, scoring: CvScoring) -> Self {
        self.scoring = scoring;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvPoint {
    pub lambda: f64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub best_lambda: f64,
    pub curve: Vec<CvPoint>,
}

/// Fold label of every row: a seeded shuffle dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut label = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        label[i] = pos % folds;
    }
    label
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn held_out_scores(data: &Dataset, base: &FitConfig, cv: &CvConfig, labels: &[usize], fold: usize) -> Result<Vec<f64>> {
    let train: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != fold).collect();
    let test: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == fold).collect();
    // a fresh dataset so that to_raw_scale maps back onto `data`'s scale
    let raw_train = Dataset::new(data.x().select(Axis(0), &train), data.y().select(Axis(0), &train))?;
    let train_std = standardize(&raw_train)?;
    let x_test = data.x().select(Axis(0), &test);
    let y_test = data.y().select(Axis(0), &test);
    let path = fit_path(&train_std, base, &cv.lambda_grid)?;
    Ok(path
        .iter()
        .map(|res| {
            let coef = train_std.to_raw_scale(&res.coefficients);
            let r = &y_test - &crate::data::predict(x_test.view(), &coef);
            let k = match cv.scoring {
                CvScoring::GammaLoss => base.gamma,
                CvScoring::SquaredLoss => 2,
            };
            r.iter().map(|v| ipow(v.abs(), k)).sum::<f64>() / r.len() as f64
        })
        .collect())
}

/// k-fold cross-validation over `cv.lambda_grid`. Training folds are
/// re-standardized; held-out error is measured on the scale of `data`.
/// Ties in mean score go to the larger `lambda`.
pub fn cross_validate(data: &Dataset, base: &FitConfig, cv: &CvConfig) -> Result<CvResult> {
    if !data.is_standardized() {
        return Err(Error::NotStandardized);
    }
    base.validate()?;
    if cv.lambda_grid.is_empty() {
        return Err(Error::EmptyLambdaGrid);
    }
    let n = data.n_samples();
    if cv.folds < 2 {
        return Err(Error::InvalidConfig(format!("folds must be at least 2, got {}", cv.folds)));
    }
    if cv.folds > n {
        return Err(Error::FoldTooSmall(format!("{} folds for {} rows leaves empty folds", cv.folds, n)));
    }
    if n - n.div_ceil(cv.folds) < 2 {
        return Err(Error::FoldTooSmall(format!("{} folds for {} rows leaves fewer than 2 training rows", cv.folds, n)));
    }
    let labels = fold_assignment(n, cv.folds, cv.seed);
    let per_fold: Vec<Vec<f64>> = (0..cv.folds)
        .into_par_iter()
        .map(|f| held_out_scores(data, base, cv, &labels, f))
        .collect::<Result<_>>()?;

    let curve: Vec<CvPoint> = cv
        .lambda_grid
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let scores: Vec<f64> = per_fold.iter().map(|s| s[k]).collect();
            let (mean, sd) = mean_sd(&scores);
            CvPoint { lambda, mean, sd }
        })
        .collect();
    let best = curve
        .iter()
        .filter(|c| c.mean.is_finite())
        .min_by(|a, b| a.mean.total_cmp(&b.mean).then(b.lambda.total_cmp(&a.lambda)))
        .unwrap_or(&curve[0]);
    Ok(CvResult {
        best_lambda: best.lambda,
        curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityConfig {
    pub gammas: Vec<u32>,
    pub subsamples: usize,
    pub subsample_fraction: f64,
    pub lambda_rule: f64,
    pub seed: u64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            gammas: vec![2, 4, 6],
            subsamples: 100,
            subsample_fraction: 0.5,
            lambda_rule: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityResult {
    pub best_gamma: u32,
    /// `(gamma, score)` in the order of `StabilityConfig::gammas`.
    pub scores: Vec<(u32, f64)>,
    /// Per-gamma selection frequency of every feature.
    pub frequencies: Vec<Vec<f64>>,
}

/// Picks `gamma` by the stability of the L1 support across row subsamples.
/// The score of one `gamma` is the mean over features of `pi_j (1 - pi_j)`;
/// lower is more stable and ties go to the smaller `gamma`. All `gamma`s
/// see the same subsamples.
pub fn stability_select_gamma(data: &Dataset, cfg: &StabilityConfig) -> Result<StabilityResult> {
    if cfg.gammas.is_empty() {
        return Err(Error::InvalidConfig("gammas must be nonempty".into()));
    }
    for &g in &cfg.gammas {
        check_gamma(g)?;
    }
    if cfg.subsamples == 0 {
        return Err(Error::InvalidConfig("subsamples must be at least 1".into()));
    }
    if !(cfg.subsample_fraction > 0.0 && cfg.subsample_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "subsample_fraction must lie in (0, 1), got {}",
            cfg.subsample_fraction
        )));
    }
    if !(cfg.lambda_rule > 0.0) {
        return Err(Error::InvalidConfig("lambda_rule must be positive".into()));
    }
    let n = data.n_samples();
    let m = (cfg.subsample_fraction * n as f64).floor() as usize;
    if m < 3 {
        return Err(Error::SubsampleTooSmall(m));
    }
    let p = data.n_features();
    let subsets: Vec<Vec<usize>> = (0..cfg.subsamples)
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(b as u64));
            let mut rows = sample(&mut rng, n, m).into_vec();
            rows.sort_unstable();
            rows
        })
        .collect();

    let mut scores = Vec::with_capacity(cfg.gammas.len());
    let mut frequencies = Vec::with_capacity(cfg.gammas.len());
    for &gamma in &cfg.gammas {
        let supports: Vec<Vec<usize>> = subsets
            .par_iter()
            .map(|rows| {
                let raw = Dataset::new(data.x().select(Axis(0), rows), data.y().select(Axis(0), rows))?;
                let d = standardize(&raw)?;
                let lam = cfg.lambda_rule * lambda_max(&d, gamma)?;
                let res = fit(&d, &FitConfig::new(gamma, PenaltySpec::l1(lam)))?;
                Ok(res.coefficients.support().to_vec())
            })
            .collect::<Result<_>>()?;
        let mut freq = Array1::<f64>::zeros(p);
        for s in &supports {
            for &j in s {
                freq[j] += 1.0;
            }
        }
        freq /= cfg.subsamples as f64;
        let score = instability(freq.view());
        scores.push((gamma, score));
        frequencies.push(freq.to_vec());
    }
    let best_gamma = scores
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|s| s.0)
        .expect("gammas checked nonempty");
    Ok(StabilityResult {
        best_gamma,
        scores,
        frequencies,
    })
}

fn instability(freq: ArrayView1<'_, f64>) -> f64 {
    freq.iter().map(|f| f * (1.0 - f)).sum::<f64>() / freq.len() as f64
}

/// The path entry whose support size is closest to `target`; ties go to the
/// smaller support, then to the larger `lambda`.
pub fn oracle_sparsity_select(path: &[FitResult], target: usize) -> Result<&FitResult> {
    path.iter()
        .min_by(|a, b| {
            let (sa, sb) = (a.support_size(), b.support_size());
            sa.abs_diff(target)
                .cmp(&sb.abs_diff(target))
                .then(sa.cmp(&sb))
                .then(b.lambda.total_cmp(&a.lambda))
        })
        .ok_or(Error::EmptyPath)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Coefficients;
    use ndarray::Array2;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn sized(sizes: &[usize]) -> Vec<FitResult> {
        sizes
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let mut b = Array1::zeros(30);
                b.slice_mut(ndarray::s![..s]).fill(1.0);
                let mut r = FitResult::empty(30, 1.0 / (k + 1) as f64);
                r.coefficients = Coefficients::new(b);
                r
            })
            .collect()
    }

    fn noise(seed: u64, n: usize, p: usize, signal: &[f64]) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng));
        let mut y = Array1::from_shape_fn(n, |_| StandardNormal.sample(&mut rng));
        for (j, b) in signal.iter().enumerate() {
            y.scaled_add(*b, &x.column(j));
        }
        standardize(&Dataset::new(x, y).unwrap()).unwrap()
    }

    #[test]
    fn oracle_exact_match() {
        let path = sized(&[0, 4, 10, 22]);
        assert_eq!(oracle_sparsity_select(&path, 10).unwrap().support_size(), 10);
    }

    #[test]
    fn oracle_tie_goes_sparser() {
        let path = sized(&[0, 8, 12]);
        assert_eq!(oracle_sparsity_select(&path, 10).unwrap().support_size(), 8);
    }

    #[test]
    fn oracle_empty_path() {
        assert!(matches!(oracle_sparsity_select(&[], 3), Err(Error::EmptyPath)));
    }

    #[test]
    fn folds_are_balanced_and_seeded() {
        let a = fold_assignment(23, 5, 9);
        assert_eq!(a, fold_assignment(23, 5, 9));
        assert_ne!(a, fold_assignment(23, 5, 10));
        for f in 0..5 {
            let c = a.iter().filter(|&&l| l == f).count();
            assert!(c == 4 || c == 5);
        }
    }

    #[test]
    fn single_lambda_grid() {
        let d = noise(1, 40, 5, &[1.0]);
        let cv = CvConfig::new(vec![0.05]);
        let res = cross_validate(&d, &FitConfig::new(2, PenaltySpec::l1(0.0)), &cv).unwrap();
        assert_eq!(res.best_lambda, 0.05);
        assert_eq!(res.curve.len(), 1);
    }

    #[test]
    fn too_many_folds() {
        let d = noise(1, 6, 2, &[1.0]);
        let base = FitConfig::new(2, PenaltySpec::l1(0.0));
        assert!(matches!(
            cross_validate(&d, &base, &CvConfig::new(vec![0.1]).with_folds(7)),
            Err(Error::FoldTooSmall(_))
        ));
    }

    #[test]
    fn leave_one_out_sizes_run() {
        let d = noise(2, 8, 2, &[1.0]);
        let base = FitConfig::new(2, PenaltySpec::l1(0.0));
        let grid = crate::solver::lambda_grid(lambda_max(&d, 2).unwrap(), 5, 0.01);
        for folds in [7, 8] {
            let res = cross_validate(&d, &base, &CvConfig::new(grid.clone()).with_folds(folds)).unwrap();
            assert!(res.curve.iter().all(|c| c.mean.is_finite()));
        }
    }

    #[test]
    fn cv_finds_strong_features() {
        let mut hits = 0;
        for seed in 0..10 {
            let d = noise(seed, 200, 20, &[2.0, -1.5, 1.0]);
            let base = FitConfig::new(2, PenaltySpec::l1(0.0));
            let grid = crate::solver::default_lambda_grid(&d, 2).unwrap();
            let cv = CvConfig::new(grid).with_seed(seed);
            let best = cross_validate(&d, &base, &cv).unwrap().best_lambda;
            let res = fit(&d, &base.clone().with_lambda(best)).unwrap();
            if (0..3).all(|j| res.coefficients.support().contains(&j)) {
                hits += 1;
            }
        }
        assert!(hits >= 9, "{hits}/10");
    }

    #[test]
    fn cv_prefers_sparse_on_noise() {
        let mut top = 0;
        for seed in 0..20 {
            let d = noise(100 + seed, 100, 10, &[]);
            let base = FitConfig::new(2, PenaltySpec::l1(0.0));
            let grid = crate::solver::lambda_grid(lambda_max(&d, 2).unwrap(), 20, 0.01);
            let cv = CvConfig::new(grid.clone()).with_seed(seed).with_scoring(CvScoring::SquaredLoss);
            let best = cross_validate(&d, &base, &cv).unwrap().best_lambda;
            if grid.iter().position(|&l| l == best).unwrap() < 5 {
                top += 1;
            }
        }
        assert!(top >= 16, "{top}/20");
    }

    #[test]
    fn perfectly_stable_selection() {
        // one feature carries the response exactly; the others are far weaker
        let d = noise(3, 100, 4, &[50.0]);
        let cfg = StabilityConfig {
            gammas: vec![2, 4],
            subsamples: 10,
            lambda_rule: 0.5,
            ..StabilityConfig::default()
        };
        let res = stability_select_gamma(&d, &cfg).unwrap();
        assert_eq!(res.scores.iter().map(|s| s.1).collect::<Vec<_>>(), vec![0.0, 0.0]);
        assert_eq!(res.best_gamma, 2);
    }

    #[test]
    fn singleton_gamma() {
        let d = noise(4, 60, 5, &[1.0]);
        let cfg = StabilityConfig {
            gammas: vec![4],
            subsamples: 5,
            ..StabilityConfig::default()
        };
        assert_eq!(stability_select_gamma(&d, &cfg).unwrap().best_gamma, 4);
    }

    #[test]
    fn tiny_subsample() {
        let d = noise(4, 5, 2, &[1.0]);
        assert!(matches!(
            stability_select_gamma(&d, &StabilityConfig::default()),
            Err(Error::SubsampleTooSmall(2))
        ));
    }

    proptest! {
        #[test]
        fn oracle_ignores_path_order(sizes in proptest::collection::vec(0usize..30, 1..12), target in 0usize..30, rot in 0usize..12) {
            let path = sized(&sizes);
            let pick = oracle_sparsity_select(&path, target).unwrap().clone();
            let mut shuffled = path.clone();
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let again = oracle_sparsity_select(&shuffled, target).unwrap();
            prop_assert_eq!(pick.lambda, again.lambda);
        }
    }
}
