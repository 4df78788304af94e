//! Choose gamma by support stability across half-subsamples.

use exlasso::selection::{stability_select_gamma, StabilityConfig};
use exlasso::simulation::{generate, ScenarioSpec};
use exlasso::standardize;

fn main() {
    let spec = ScenarioSpec {
        n: 300,
        p: 50,
        s: 5,
        ..ScenarioSpec::linear()
    };
    let (raw, _) = generate(&spec).unwrap();
    let data = standardize(&raw).unwrap();
    let cfg = StabilityConfig {
        subsamples: 40,
        ..StabilityConfig::default()
    };
    let res = stability_select_gamma(&data, &cfg).unwrap();
    for (g, score) in &res.scores {
        println!("gamma {g}: instability {score:.4}");
    }
    println!("chosen gamma = {}", res.best_gamma);
}
