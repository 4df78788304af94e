//! Warm-started path over the default 50-point grid for gamma in {2, 4, 6}.

use exlasso::simulation::{generate, ScenarioSpec};
use exlasso::solver::{default_lambda_grid, fit_path};
use exlasso::{standardize, FitConfig, PenaltySpec};

fn main() {
    let spec = ScenarioSpec {
        n: 300,
        p: 60,
        s: 4,
        ..ScenarioSpec::linear()
    };
    let (raw, truth) = generate(&spec).unwrap();
    let data = standardize(&raw).unwrap();
    println!("true support {:?}", truth.true_support);

    for gamma in [2, 4, 6] {
        let grid = default_lambda_grid(&data, gamma).unwrap();
        let cfg = FitConfig::new(gamma, PenaltySpec::l1(0.0));
        let path = fit_path(&data, &cfg, &grid).unwrap();
        println!("\ngamma = {gamma}");
        for r in path.iter().step_by(7) {
            println!(
                "  lambda {:>10.3e}  size {:>3}  iters {:>5}  {:?}",
                r.lambda,
                r.support_size(),
                r.iterations,
                &r.coefficients.support()[..r.support_size().min(6)]
            );
        }
    }
}
