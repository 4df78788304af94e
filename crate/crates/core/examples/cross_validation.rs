//! Five-fold cross-validation of lambda, scored by held-out gamma loss and
//! by squared error.

use exlasso::selection::{cross_validate, CvConfig, CvScoring};
use exlasso::simulation::{generate, ScenarioSpec};
use exlasso::solver::default_lambda_grid;
use exlasso::{fit, standardize, FitConfig, PenaltySpec};

fn main() {
    let spec = ScenarioSpec {
        n: 300,
        p: 40,
        s: 4,
        tau: 15.0,
        ..ScenarioSpec::linear()
    };
    let (raw, truth) = generate(&spec).unwrap();
    let data = standardize(&raw).unwrap();
    let base = FitConfig::new(4, PenaltySpec::l1(0.0));
    let grid = default_lambda_grid(&data, 4).unwrap();

    for scoring in [CvScoring::GammaLoss, CvScoring::SquaredLoss] {
        let cv = CvConfig::new(grid.clone()).with_seed(7).with_scoring(scoring);
        let res = cross_validate(&data, &base, &cv).unwrap();
        let best = fit(&data, &base.clone().with_lambda(res.best_lambda)).unwrap();
        println!(
            "{scoring:?}: lambda {:.3e}, support {:?} (true {:?})",
            res.best_lambda,
            best.coefficients.support(),
            truth.true_support
        );
        for pt in res.curve.iter().step_by(10) {
            println!("  {:>10.3e}  {:.4e} +- {:.2e}", pt.lambda, pt.mean, pt.sd);
        }
    }
}
