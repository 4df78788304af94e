//! Influence of one contaminating point, gamma = 4 against gamma = 2, as
//! the point's residual grows.

use exlasso::diagnostics::{influence, influence_ratio};
use exlasso::simulation::{generate, ScenarioSpec};
use exlasso::{fit, lambda_max, standardize, FitConfig, PenaltySpec};
use ndarray::Array1;

fn main() {
    let spec = ScenarioSpec {
        n: 500,
        p: 10,
        s: 3,
        tau: 0.0,
        ar_coeff: 0.5,
        gamma_rate: 3.0,
        ..ScenarioSpec::linear()
    };
    let (raw, _) = generate(&spec).unwrap();
    let data = standardize(&raw).unwrap();
    let penalty = PenaltySpec::l1(0.02 * lambda_max(&data, 4).unwrap());
    let res = fit(&data, &FitConfig::new(4, penalty)).unwrap();
    println!("active set {:?}", res.coefficients.support());

    let x0 = Array1::from_elem(10, 0.5);
    let fitted = x0.dot(&res.coefficients.beta()) + res.coefficients.intercept();
    for r0 in [1.0, 3.0, 5.0, 10.0] {
        let y0 = fitted + r0;
        let ex = influence(&data, &res.coefficients, &penalty, 4, x0.view(), y0).unwrap();
        let ls = influence(&data, &res.coefficients, &penalty, 2, x0.view(), y0).unwrap();
        let ratio = influence_ratio(&ex, &ls);
        let on_active: Vec<String> = ex.active_set.iter().map(|&j| format!("{:.2}", ratio[j])).collect();
        println!("r0 = {r0:>4}: cond {:.1e}, |IF4|/|IF2| = [{}]", ex.condition_number, on_active.join(", "));
    }
}
