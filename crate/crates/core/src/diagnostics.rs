//! Influence of a contaminating point on the fitted coefficients, and Monte
//! Carlo checks of the distributional facts behind the power loss.
//!
//! The influence function is defined for the unscaled objective
//! `E_n |y - x^T beta|^gamma + sum_j p(|beta_j|)`. The solver minimizes
//! `(1/(gamma n)) sum |r|^gamma + P_lambda(beta)`, so its penalty enters
//! here multiplied by `gamma`. On the active set `S` the influence solves
//!
//! `(A + B) IF_S = gamma r0^(gamma-1) x0_S - v`
//!
//! with `A = (1/n) sum_i gamma (gamma-1) r_i^(gamma-2) x_iS x_iS^T`,
//! `B = diag(p''(|beta_j|))` and `v_j = p'(|beta_j|) sign(beta_j)`; it is
//! zero off `S`. For `gamma = 2` and no penalty this is the classical
//! least-squares influence `(X^T X / n)^{-1} x0 r0`.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::Serialize;

use crate::data::{Coefficients, Dataset};
use crate::error::{Error, Result};
use crate::loss::{check_gamma, ipow, residuals};
use crate::penalty::PenaltySpec;

/// Systems worse conditioned than this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfluenceReport {
    pub gamma: u32,
    pub lambda: f64,
    #[serde(serialize_with = "crate::data::serialize_array")]
    pub x0: Array1<f64>,
    pub y0: f64,
    pub r0: f64,
    pub active_set: Vec<usize>,
    /// Influence on every coefficient; exactly zero off the active set.
    #[serde(serialize_with = "crate::data::serialize_array")]
    pub values: Array1<f64>,
    pub condition_number: f64,
}

/// Influence of the point `(x0, y0)` on the fit `beta0` of `data`. The
/// point and `beta0` live on the scale of `data`.
pub fn influence(
    data: &Dataset,
    beta0: &Coefficients,
    penalty: &PenaltySpec,
    gamma: u32,
    x0: ArrayView1<'_, f64>,
    y0: f64,
) -> Result<InfluenceReport> {
    check_gamma(gamma)?;
    penalty.validate()?;
    let p = data.n_features();
    if x0.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: x0.len(),
        });
    }
    let active: Vec<usize> = beta0.support().to_vec();
    if active.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    let r = residuals(data.x(), data.y(), beta0)?;
    let r0 = y0 - x0.dot(&beta0.beta()) - beta0.intercept();
    let g = f64::from(gamma);
    let n = data.n_samples() as f64;
    let k = active.len();

    let weights: Vec<f64> = r.iter().map(|&ri| g * (g - 1.0) * ipow(ri, gamma - 2) / n).collect();
    let x = data.x();
    let mut m = DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        let ca = x.column(active[a]);
        for b in a..k {
            let cb = x.column(active[b]);
            let v: f64 = ca.iter().zip(cb.iter()).zip(&weights).map(|((u, v), w)| u * v * w).sum();
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    let mut rhs = DVector::<f64>::zeros(k);
    let lead = g * ipow(r0, gamma - 1);
    for (a, &j) in active.iter().enumerate() {
        let bj = beta0.beta()[j];
        let (d1, d2) = penalty.derivatives(bj)?;
        m[(a, a)] += g * d2;
        rhs[a] = lead * x0[j] - g * d1 * bj.signum();
    }

    let svd = m.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularSystem(cond));
    }
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|_| Error::SingularSystem(cond))?;
    let mut values = Array1::zeros(p);
    for (a, &j) in active.iter().enumerate() {
        values[j] = sol[a];
    }
    Ok(InfluenceReport {
        gamma,
        lambda: penalty.lambda,
        x0: x0.to_owned(),
        y0,
        r0,
        active_set: active,
        values,
        condition_number: cond,
    })
}

/// `|IF_extreme| / |IF_lasso|` per coefficient. Coordinates where the
/// denominator is zero give `+inf` (or `NaN` when both are zero).
pub fn influence_ratio(extreme: &InfluenceReport, lasso: &InfluenceReport) -> Vec<f64> {
    extreme
        .values
        .iter()
        .zip(lasso.values.iter())
        .map(|(a, b)| {
            if *b == 0.0 {
                if *a == 0.0 {
                    f64::NAN
                } else {
                    f64::INFINITY
                }
            } else {
                a.abs() / b.abs()
            }
        })
        .collect()
}

/// Generalized normal distribution with density proportional to
/// `exp(-(|z| / scale)^alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubbotinDist {
    pub alpha: f64,
    pub scale: f64,
}

impl SubbotinDist {
    pub fn new(alpha: f64, scale: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(scale > 0.0) {
            return Err(Error::InvalidConfig("Subbotin alpha and scale must be positive".into()));
        }
        Ok(Self { alpha, scale })
    }

    /// `scale^2 Gamma(3/alpha) / Gamma(1/alpha)`.
    pub fn variance(&self) -> f64 {
        use statrs::function::gamma::gamma;
        self.scale * self.scale * gamma(3.0 / self.alpha) / gamma(1.0 / self.alpha)
    }
}

/// `Z = s * scale * G^(1/alpha)` with `G ~ Gamma(1/alpha, 1)` and a fair
/// random sign `s`.
pub fn subbotin_sample(dist: &SubbotinDist, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Gamma::new(1.0 / dist.alpha, 1.0).expect("alpha validated positive");
    (0..count)
        .map(|_| {
            let mag = dist.scale * g.sample(&mut rng).powf(1.0 / dist.alpha);
            if rng.random::<bool>() {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

/// Kolmogorov-Smirnov distance between the sample and `cdf`.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// KS distance of `Z^alpha` against `Gamma(1/alpha, 1)` for `count` unit
/// Subbotin draws.
pub fn subbotin_power_ks(alpha: u32, count: usize, seed: u64) -> Result<f64> {
    use statrs::distribution::{ContinuousCDF, Gamma as GammaCdf};
    let dist = SubbotinDist::new(f64::from(alpha), 1.0)?;
    let powered: Vec<f64> = subbotin_sample(&dist, count, seed)
        .into_iter()
        .map(|z| ipow(z, alpha))
        .collect();
    let reference = GammaCdf::new(1.0 / f64::from(alpha), 1.0).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(ks_distance(&powered, |v| reference.cdf(v)))
}

/// Points in the tail grid of [`verify_power_tail`].
const TAIL_GRID: usize = 200;

/// Largest excess of the empirical tail `P(|Q|^(gamma-1) >= t)`,
/// `Q ~ N(0, sigma^2)`, over the bound `2 exp(-t^(2/(gamma-1)) / (2 sigma^2))`
/// on a grid of `t`. Non-positive values mean the bound held everywhere.
pub fn verify_power_tail(sigma: f64, gamma: u32, count: usize, seed: u64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(sigma > 0.0) || count == 0 {
        return Err(Error::InvalidConfig("sigma must be positive and count at least 1".into()));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = gamma - 1;
    let mut powered: Vec<f64> = (0..count)
        .map(|_| ipow(normal.sample(&mut rng).abs(), k))
        .collect();
    powered.sort_by(f64::total_cmp);
    let n = count as f64;
    let kf = f64::from(k);
    let worst = (0..TAIL_GRID)
        .map(|i| {
            let u = 6.0 * sigma * i as f64 / (TAIL_GRID - 1) as f64;
            let t = ipow(u, k);
            let below = powered.partition_point(|&v| v < t);
            let empirical = (count - below) as f64 / n;
            let bound = 2.0 * (-t.powf(2.0 / kf) / (2.0 * sigma * sigma)).exp();
            empirical - bound
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::standardize;
    use crate::solver::{fit, FitConfig};
    use nalgebra::DMatrix;
    use ndarray::Array2;
    use rand_distr::StandardNormal;

    fn instance(seed: u64, n: usize, p: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng));
        let mut y = Array1::from_shape_fn(n, |_| { let e: f64 = StandardNormal.sample(&mut rng); 0.5 * e });
        for j in 0..p {
            y.scaled_add(1.0 / (j + 1) as f64, &x.column(j));
        }
        standardize(&Dataset::new(x, y).unwrap()).unwrap()
    }

    fn tight(gamma: u32, penalty: PenaltySpec) -> FitConfig {
        FitConfig::new(gamma, penalty).with_delta(1e-13).with_max_iters(200_000)
    }

    #[test]
    fn ols_influence_closed_form() {
        let d = instance(1, 60, 4);
        let res = fit(&d, &tight(2, PenaltySpec::none())).unwrap();
        let x0 = Array1::from(vec![0.3, -1.0, 2.0, 0.5]);
        let y0 = 1.7;
        let rep = influence(&d, &res.coefficients, &PenaltySpec::none(), 2, x0.view(), y0).unwrap();

        let xm = DMatrix::from_fn(60, 4, |i, j| d.x()[[i, j]]);
        let gram = xm.transpose() * &xm / 60.0;
        let r0 = y0 - x0.dot(&res.coefficients.beta());
        let expect = gram.try_inverse().unwrap() * DVector::from_column_slice(x0.as_slice().unwrap()) * r0;
        for j in 0..4 {
            assert!((rep.values[j] - expect[j]).abs() < 1e-8, "{j}: {} vs {}", rep.values[j], expect[j]);
        }
    }

    #[test]
    fn inactive_coordinates_are_exact_zeros() {
        let d = instance(2, 80, 6);
        let lam = 0.3 * crate::solver::lambda_max(&d, 4).unwrap();
        let res = fit(&d, &tight(4, PenaltySpec::l1(lam))).unwrap();
        assert!(res.support_size() < 6);
        let x0 = Array1::from_elem(6, 1.0);
        let rep = influence(&d, &res.coefficients, &PenaltySpec::l1(lam), 4, x0.view(), 3.0).unwrap();
        for j in 0..6 {
            if !res.coefficients.support().contains(&j) {
                assert_eq!(rep.values[j], 0.0);
            }
        }
    }

    #[test]
    fn zero_residual_leaves_penalty_term() {
        let d = instance(3, 80, 3);
        let lam = 0.05;
        let res = fit(&d, &tight(4, PenaltySpec::l1(lam))).unwrap();
        let coef = &res.coefficients;
        let mut big = Array1::from(vec![5.0, -3.0, 2.0]);
        let y_big = big.dot(&coef.beta());
        let a = influence(&d, coef, &PenaltySpec::l1(lam), 4, big.view(), y_big).unwrap();
        big.mapv_inplace(|v| v * 0.01);
        let y_small = big.dot(&coef.beta());
        let b = influence(&d, coef, &PenaltySpec::l1(lam), 4, big.view(), y_small).unwrap();
        assert_eq!(a.r0, 0.0);
        for j in 0..3 {
            assert!((a.values[j] - b.values[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_active_set() {
        let d = instance(4, 30, 2);
        let err = influence(&d, &Coefficients::zeros(2), &PenaltySpec::l1(1.0), 4, Array1::zeros(2).view(), 1.0);
        assert!(matches!(err, Err(Error::EmptyActiveSet)));
    }

    #[test]
    fn collinear_system_is_singular() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = Array1::from_shape_fn(40, |_| StandardNormal.sample(&mut rng));
        let mut x = Array2::zeros((40, 2));
        x.column_mut(0).assign(&base);
        x.column_mut(1).assign(&base);
        let d = Dataset::new(x, base.clone()).unwrap();
        let coef = Coefficients::new(Array1::from(vec![0.5, 0.5]));
        let err = influence(&d, &coef, &PenaltySpec::none(), 2, Array1::ones(2).view(), 0.0);
        assert!(matches!(err, Err(Error::SingularSystem(_))));
    }

    #[test]
    fn ratio_sentinels() {
        let mk = |v: Vec<f64>| InfluenceReport {
            gamma: 2,
            lambda: 0.0,
            x0: Array1::zeros(3),
            y0: 0.0,
            r0: 0.0,
            active_set: vec![],
            values: Array1::from(v),
            condition_number: 1.0,
        };
        let r = influence_ratio(&mk(vec![2.0, 1.0, 0.0]), &mk(vec![-1.0, 0.0, 0.0]));
        assert_eq!(r[0], 2.0);
        assert_eq!(r[1], f64::INFINITY);
        assert!(r[2].is_nan());
    }

    #[test]
    fn ratio_grows_with_residual() {
        let d = instance(6, 150, 3);
        let lam = 0.01;
        let res = fit(&d, &tight(4, PenaltySpec::l1(lam))).unwrap();
        let coef = &res.coefficients;
        let x0 = Array1::from(vec![1.0, 0.5, -0.8]);
        let mut last = vec![0.0; 3];
        for r0 in [3.0, 5.0, 10.0] {
            let y0 = x0.dot(&coef.beta()) + r0;
            let e = influence(&d, coef, &PenaltySpec::l1(lam), 4, x0.view(), y0).unwrap();
            let l = influence(&d, coef, &PenaltySpec::l1(lam), 2, x0.view(), y0).unwrap();
            let ratio = influence_ratio(&e, &l);
            for j in coef.support() {
                assert!(ratio[*j] > last[*j]);
                last[*j] = ratio[*j];
            }
        }
    }

    #[test]
    fn subbotin_signs_are_fair() {
        let z = subbotin_sample(&SubbotinDist::new(4.0, 1.0).unwrap(), 100_000, 1);
        let mean_sign = z.iter().map(|v| v.signum()).sum::<f64>() / z.len() as f64;
        assert!(mean_sign.abs() < 3.0 / (z.len() as f64).sqrt());
    }

    #[test]
    fn subbotin_alpha_two_is_gaussian() {
        use statrs::distribution::{ContinuousCDF, Normal as NormalCdf};
        let dist = SubbotinDist::new(2.0, 1.0).unwrap();
        let z = subbotin_sample(&dist, 100_000, 2);
        let sd = dist.variance().sqrt();
        assert!((sd - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let normal = NormalCdf::new(0.0, sd).unwrap();
        assert!(ks_distance(&z, |v| normal.cdf(v)) < 0.01);
    }

    #[test]
    fn ks_distance_of_exact_grid() {
        let s: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        assert!((ks_distance(&s, |v| v.clamp(0.0, 1.0)) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn gaussian_tail_bound() {
        let count = 100_000;
        let v = verify_power_tail(1.0, 2, count, 3).unwrap();
        assert!(v < 2.0 / (count as f64).sqrt());
    }
}
