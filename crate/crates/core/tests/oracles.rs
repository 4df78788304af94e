//! Solver, prox, loss and influence checked against the reference
//! implementations in `common`.

mod common;

use exlasso::diagnostics::influence;
use exlasso::loss::GammaLoss;
use exlasso::penalty::{DEFAULT_MCP_GAMMA, DEFAULT_SCAD_A};
use exlasso::solver::fit_arrays;
use exlasso::{fit, lambda_max, FitConfig, PenaltySpec};
use ndarray::Array1;
use proptest::prelude::*;

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lasso_matches_coordinate_descent(seed in 0u64..10_000, n in 20usize..80, p in 2usize..15, frac in 0.02f64..0.9) {
        let d = gaussian_instance(seed, n, p, 2, 1.0);
        let lam = frac * lambda_max(&d, 2).unwrap();
        let cfg = FitConfig::new(2, PenaltySpec::l1(lam)).with_delta(1e-12).with_max_iters(1_000_000);
        let res = fit(&d, &cfg).unwrap();
        let oracle = cd_lasso(d.x(), d.y(), lam);
        prop_assert!(max_abs_diff(res.coefficients.beta(), oracle.view()) < 1e-6);
    }

    #[test]
    fn kkt_holds_at_convergence(seed in 0u64..10_000, gamma in prop::sample::select(vec![2u32, 4, 6, 8]), frac in 0.05f64..0.8) {
        let d = gaussian_instance(seed, 60, 8, 3, 0.5);
        let lam = frac * lambda_max(&d, gamma).unwrap();
        let delta = 1e-10;
        let cfg = FitConfig::new(gamma, PenaltySpec::l1(lam)).with_delta(delta).with_max_iters(1_000_000);
        let res = fit(&d, &cfg).unwrap();
        prop_assert!(res.converged);
        let bound = 10.0 * 60.0 * delta / res.final_step;
        let g = GammaLoss::new(gamma).unwrap().gradient(&d, &res.coefficients).unwrap();
        for (j, &b) in res.coefficients.beta().iter().enumerate() {
            if b != 0.0 {
                prop_assert!((g[j] + lam * b.signum()).abs() < bound);
            } else {
                prop_assert!(g[j].abs() <= lam + bound);
            }
        }
    }

    #[test]
    fn prox_matches_grid_search(v in -8.0f64..8.0, lam in 0.05f64..2.0, step in 0.1f64..1.0) {
        let cases: [(PenaltySpec, Box<dyn Fn(f64) -> f64>); 3] = [
            (PenaltySpec::l1(lam), Box::new(l1_value(lam))),
            (PenaltySpec::scad(lam), Box::new(scad_value(lam, DEFAULT_SCAD_A))),
            (PenaltySpec::mcp(lam), Box::new(mcp_value(lam, DEFAULT_MCP_GAMMA))),
        ];
        for (spec, value) in cases {
            let z = spec.prox_scalar(v, step);
            prop_assert!((z - grid_prox(v, step, value)).abs() < 2e-4, "{:?} v={} z={}", spec.family, v, z);
        }
    }

    #[test]
    fn loss_change_matches_difference(r in prop::collection::vec(-3.0f64..3.0, 1..30), shift in -1.0f64..1.0, gamma in prop::sample::select(vec![2u32, 4, 6, 8])) {
        let loss = GammaLoss::new(gamma).unwrap();
        let a = Array1::from(r);
        let b = a.mapv(|v| v + shift * v.sin());
        let direct = loss.value_from_residuals(b.view()).unwrap() - loss.value_from_residuals(a.view()).unwrap();
        let change = loss.value_change(a.view(), b.view()).unwrap();
        prop_assert!((direct - change).abs() <= 1e-12 * (1.0 + direct.abs()));
    }
}

#[test]
fn loss_change_resolves_tiny_steps() {
    let loss = GammaLoss::new(6).unwrap();
    let a: Array1<f64> = Array1::from(vec![1.3, -2.1, 0.7]);
    let b = a.mapv(|v| v + 1e-12);
    // first order: (1/n) sum r^5 (b - a)
    let expected = a.iter().zip(&b).map(|(u, v): (&f64, &f64)| u.powi(5) * (v - u)).sum::<f64>() / 3.0;
    let change = loss.value_change(a.view(), b.view()).unwrap();
    assert!((change - expected).abs() < 1e-6 * expected.abs());
}

#[test]
fn mcp_influence_matches_contamination() {
    // nonconvex penalty: the curvature term of the influence system is active
    let n = 198;
    let d = gaussian_instance(41, n, 5, 3, 0.5);
    let lam = 0.2 * lambda_max(&d, 4).unwrap();
    let penalty = PenaltySpec::mcp(lam);
    let tight = FitConfig::new(4, penalty).with_delta(1e-14).with_max_iters(2_000_000);
    let base = fit(&d, &tight).unwrap();
    let b0 = base.coefficients.beta().to_owned();
    let in_curved_part = base
        .coefficients
        .support()
        .iter()
        .any(|&j| b0[j].abs() < DEFAULT_MCP_GAMMA * lam);
    assert!(in_curved_part, "instance should exercise the MCP curvature");

    let x0 = Array1::from(vec![0.8, -0.4, 0.3, 1.1, -0.6]);
    let y0 = x0.dot(&b0) + 1.2;
    let rep = influence(&d, &base.coefficients, &penalty, 4, x0.view(), y0).unwrap();
    let quotient = |copies: usize| {
        let eps = copies as f64 / (n + copies) as f64;
        let (xa, ya) = contaminate(d.x(), d.y(), x0.view(), y0, copies);
        let r = fit_arrays(xa.view(), ya.view(), &tight.clone().with_initial_beta(b0.clone())).unwrap();
        (eps, (&r.coefficients.beta() - &b0) / eps)
    };
    let (e1, d1) = quotient(2);
    let (e2, d2) = quotient(1);
    let oracle = (&d2 * e1 - &d1 * e2) / (e1 - e2);
    for &j in &rep.active_set {
        let rel = (rep.values[j] - oracle[j]).abs() / oracle[j].abs();
        assert!(rel < 0.1, "coordinate {j}: IF {} vs oracle {}", rep.values[j], oracle[j]);
    }
}
