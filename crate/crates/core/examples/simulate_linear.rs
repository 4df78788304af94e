//! Small version of the linear tau sweep: spiked AR(1) predictors,
//! oracle-sparsity tuning, F-1 per method.
//!
//!     cargo run --release --example simulate_linear -- [replicates]

use exlasso::simulation::{run_scenario_sweep, Method, ScenarioSpec, SweepAxis};

fn main() {
    let reps = std::env::args().nth(1).map_or(2, |s| s.parse().unwrap());
    let base = ScenarioSpec {
        n: 400,
        p: 200,
        s: 5,
        ..ScenarioSpec::linear()
    };
    let methods = [Method::ExLasso4, Method::ExLasso6, Method::Lasso, Method::Median, Method::Threshold];
    let table = run_scenario_sweep(&base, SweepAxis::Tau, &[6.0, 11.0, 15.0], &methods, reps).unwrap();
    table.write_csv(std::io::stdout()).unwrap();
}
