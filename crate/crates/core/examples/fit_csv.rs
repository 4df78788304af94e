//! Read a CSV, standardize, fit the gamma = 4 model at a fraction of
//! lambda_max and print the coefficients on the original scale.
//!
//!     cargo run --example fit_csv -- [data.csv response_column]

use std::io::Write;

use exlasso::{fit, lambda_max, read_csv, standardize, FitConfig, PenaltySpec, ResponseColumn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn demo_csv() -> std::path::PathBuf {
    let path = std::env::temp_dir().join("exlasso_demo.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "y,a,b,c,d,e").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..200 {
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        // feature `a` carries a handful of large events
        let a = if i % 40 == 0 { x[0] + 6.0 } else { x[0] };
        let y = 2.0 * a - x[3] + 0.1 * rng.random_range(-1.0..1.0);
        writeln!(f, "{y},{a},{},{},{},{}", x[1], x[2], x[3], x[4]).unwrap();
    }
    path
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (path, response) = match args.as_slice() {
        [p, r] => (p.into(), r.parse::<ResponseColumn>().unwrap()),
        _ => (demo_csv(), ResponseColumn::Name("y".into())),
    };
    let raw = read_csv(&path, &response).expect("readable CSV");
    let data = standardize(&raw).unwrap();

    let lmax = lambda_max(&data, 4).unwrap();
    let cfg = FitConfig::new(4, PenaltySpec::l1(0.01 * lmax));
    let res = fit(&data, &cfg).unwrap();
    println!(
        "lambda = {:.4e}  converged = {}  iterations = {}",
        res.lambda, res.converged, res.iterations
    );

    let coef = data.to_raw_scale(&res.coefficients);
    let names = data.names().map(|n| n.to_vec()).unwrap_or_default();
    println!("intercept {:>10.4}", coef.intercept());
    for &j in coef.support() {
        let name = names.get(j).cloned().unwrap_or_else(|| format!("x{j}"));
        println!("{name:>9} {:>10.4}", coef.beta()[j]);
    }
}
