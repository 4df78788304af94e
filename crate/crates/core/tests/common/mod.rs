//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the solver under test.

#![allow(dead_code)]

use exlasso::{standardize, Dataset};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Gaussian design with `k` unit coefficients plus Gaussian noise, standardized.
pub fn gaussian_instance(seed: u64, n: usize, p: usize, k: usize, noise: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng));
    let mut y = Array1::from_shape_fn(n, |_| {
        let e: f64 = StandardNormal.sample(&mut rng);
        noise * e
    });
    for j in 0..k.min(p) {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        y.scaled_add(sign, &x.column(j));
    }
    standardize(&Dataset::new(x, y).unwrap()).unwrap()
}

fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// Cyclic coordinate descent for `(1/(2n)) ||y - X b||^2 + lambda ||b||_1`.
pub fn cd_lasso(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, lambda: f64) -> Array1<f64> {
    let (n, p) = x.dim();
    let nf = n as f64;
    let col_sq: Vec<f64> = (0..p).map(|j| x.column(j).dot(&x.column(j)) / nf).collect();
    let mut b = Array1::<f64>::zeros(p);
    let mut r = y.to_owned();
    for _ in 0..100_000 {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let xj = x.column(j);
            let rho = xj.dot(&r) / nf + col_sq[j] * b[j];
            let new = soft(rho, lambda) / col_sq[j];
            let d = new - b[j];
            if d != 0.0 {
                r.scaled_add(-d, &xj);
                b[j] = new;
                max_change = max_change.max(d.abs());
            }
        }
        if max_change < 1e-14 {
            break;
        }
    }
    b
}

/// Scalar prox by brute force: coarse grid over a bracket wide enough to
/// hold the minimizer, then successively finer grids around the best point.
pub fn grid_prox(v: f64, step: f64, penalty: impl Fn(f64) -> f64) -> f64 {
    let obj = |z: f64| (z - v) * (z - v) / (2.0 * step) + penalty(z);
    let mut lo = -v.abs() - 1.0;
    let mut hi = v.abs() + 1.0;
    let mut best = 0.0;
    for _ in 0..6 {
        let m = 2000;
        let h = (hi - lo) / m as f64;
        let mut best_val = f64::INFINITY;
        for i in 0..=m {
            let z = lo + h * i as f64;
            let f = obj(z);
            if f < best_val {
                best_val = f;
                best = z;
            }
        }
        // zero is a kink for every family; check it exactly
        if obj(0.0) <= best_val {
            best = 0.0;
        }
        lo = best - 2.0 * h;
        hi = best + 2.0 * h;
    }
    best
}

pub fn l1_value(lambda: f64) -> impl Fn(f64) -> f64 {
    move |z: f64| lambda * z.abs()
}

pub fn scad_value(lambda: f64, a: f64) -> impl Fn(f64) -> f64 {
    move |z: f64| {
        let t = z.abs();
        if t <= lambda {
            lambda * t
        } else if t <= a * lambda {
            (2.0 * a * lambda * t - t * t - lambda * lambda) / (2.0 * (a - 1.0))
        } else {
            lambda * lambda * (a + 1.0) / 2.0
        }
    }
}

pub fn mcp_value(lambda: f64, g: f64) -> impl Fn(f64) -> f64 {
    move |z: f64| {
        let t = z.abs();
        if t <= g * lambda {
            lambda * t - t * t / (2.0 * g)
        } else {
            g * lambda * lambda / 2.0
        }
    }
}

/// `(1/(gamma n)) sum r^gamma` written out with `powi`.
pub fn scaled_loss(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>, gamma: u32) -> f64 {
    let r = &y - &x.dot(&b);
    r.iter().map(|v| v.powi(gamma as i32)).sum::<f64>() / (gamma as f64 * y.len() as f64)
}

/// Central-difference gradient of [`scaled_loss`].
pub fn fd_gradient(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>, gamma: u32) -> Array1<f64> {
    let mut g = Array1::zeros(b.len());
    let mut bp = b.to_owned();
    for j in 0..b.len() {
        let h = 1e-5 * (1.0 + b[j].abs());
        let orig = bp[j];
        bp[j] = orig + h;
        let fp = scaled_loss(x, y, bp.view(), gamma);
        bp[j] = orig - h;
        let fm = scaled_loss(x, y, bp.view(), gamma);
        bp[j] = orig;
        g[j] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Appends `copies` replicas of `(x0, y0)` to `(x, y)`.
pub fn contaminate(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    x0: ArrayView1<'_, f64>,
    y0: f64,
    copies: usize,
) -> (Array2<f64>, Array1<f64>) {
    let (n, p) = x.dim();
    let mut xa = Array2::zeros((n + copies, p));
    xa.slice_mut(ndarray::s![..n, ..]).assign(&x);
    let mut ya = Array1::zeros(n + copies);
    ya.slice_mut(ndarray::s![..n]).assign(&y);
    for i in n..n + copies {
        xa.row_mut(i).assign(&x0);
        ya[i] = y0;
    }
    (xa, ya)
}

pub fn max_abs_diff(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
