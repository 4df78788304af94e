//! The two baselines: penalized quantile regression with a smoothed pinball
//! loss, and CUSUM flagging followed by a Lasso on the flagged rows.

use exlasso::baselines::{
    cusum_threshold, fit_quantile, quantile_lambda_max, threshold_then_lasso, QuantileConfig, ThresholdConfig,
};
use exlasso::simulation::{generate, ScenarioSpec};
use exlasso::{standardize, FitConfig, PenaltySpec};

fn main() {
    let spec = ScenarioSpec {
        n: 400,
        p: 40,
        s: 3,
        tau: 15.0,
        events: 4,
        ..ScenarioSpec::linear()
    };
    let (raw, truth) = generate(&spec).unwrap();
    let data = standardize(&raw).unwrap();
    println!("true support {:?}", truth.true_support);

    for tau_q in [0.5, 0.9, 0.99] {
        let lmax = quantile_lambda_max(&data, tau_q);
        let res = fit_quantile(&data, &QuantileConfig::new(tau_q, 0.2 * lmax)).unwrap();
        println!(
            "quantile {tau_q}: intercept {:.3}, support {:?}",
            res.coefficients.intercept(),
            res.coefficients.support()
        );
    }

    let cfg = ThresholdConfig {
        target_support: 3,
        ..ThresholdConfig::default()
    };
    let flags = cusum_threshold(raw.y(), &cfg).unwrap();
    println!("CUSUM flagged {} of {} rows", flags.iter().filter(|&&f| f).count(), flags.len());
    let lasso = FitConfig::new(2, PenaltySpec::l1(0.05));
    let res = threshold_then_lasso(&raw, &cfg, &lasso).unwrap();
    println!("threshold + Lasso support {:?}", res.coefficients.support());
}
