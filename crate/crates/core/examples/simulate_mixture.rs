//! Mixture scenario: extreme rows follow one block of predictors, the rest
//! another. Lasso fits the bulk component; the power loss fits the extremes.

use exlasso::simulation::{generate, run_method, score_support, Method, ScenarioSpec};

fn main() {
    let spec = ScenarioSpec {
        n: 500,
        p: 100,
        ..ScenarioSpec::mixture()
    };
    let (raw, truth) = generate(&spec).unwrap();
    let comp = truth.component_assignment.as_ref().unwrap();
    println!(
        "{} extreme rows, true support {:?}",
        comp.iter().filter(|&&c| c == 1).count(),
        truth.true_support
    );
    for m in [Method::ExLasso6, Method::ExLasso4, Method::Lasso, Method::Q099] {
        let coef = run_method(m, &raw, truth.true_support.len()).unwrap();
        let s = score_support(&coef, &truth);
        println!("{:>9}: F-1 {:.3}  selected {:?}", m, s.f1, coef.support());
    }
}
