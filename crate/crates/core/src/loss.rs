//! The `l_gamma` power loss.
//!
//! With `scale_by_gamma_n` the loss is `(1/(gamma N)) sum |r_i|^gamma`, whose
//! gradient is `-(1/N) X^T r^(gamma-1)`; otherwise it is the plain sum
//! `sum r_i^gamma` with gradient `-gamma X^T r^(gamma-1)`.

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::data::{Coefficients, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct GammaLoss {
    gamma: u32,
    scale_by_gamma_n: bool,
}

/// `x^k` by binary exponentiation.
#[inline]
pub(crate) fn ipow(mut x: f64, mut k: u32) -> f64 {
    let mut acc = 1.0;
    while k > 0 {
        if k & 1 == 1 {
            acc *= x;
        }
        x *= x;
        k >>= 1;
    }
    acc
}

pub(crate) fn check_gamma(gamma: u32) -> Result<()> {
    if gamma < 2 || gamma % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "gamma must be even and at least 2, got {gamma}"
        )));
    }
    Ok(())
}

impl GammaLoss {
    /// Scaled loss `(1/(gamma N)) ||r||_gamma^gamma`, the solver's convention.
    pub fn new(gamma: u32) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self {
            gamma,
            scale_by_gamma_n: true,
        })
    }

    /// Unscaled loss `sum r_i^gamma`.
    pub fn unscaled(gamma: u32) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self {
            gamma,
            scale_by_gamma_n: false,
        })
    }

    pub fn gamma(&self) -> u32 {
        self.gamma
    }

    pub fn is_scaled(&self) -> bool {
        self.scale_by_gamma_n
    }

    /// Largest residual magnitude whose power stays below 1e60.
    pub fn overflow_bound(&self) -> f64 {
        10f64.powf(60.0 / f64::from(self.gamma))
    }

    fn guard(&self, r: f64) -> Result<()> {
        // NaN fails the comparison and is reported too
        if !(r.abs() <= self.overflow_bound()) {
            return Err(Error::ResidualOverflow(r.abs()));
        }
        Ok(())
    }

    pub fn value_from_residuals(&self, r: ArrayView1<'_, f64>) -> Result<f64> {
        let mut sum = 0.0;
        for &ri in r {
            self.guard(ri)?;
            sum += ipow(ri.abs(), self.gamma);
        }
        Ok(if self.scale_by_gamma_n {
            sum / (f64::from(self.gamma) * r.len() as f64)
        } else {
            sum
        })
    }

    /// `value(r_new) - value(r)`, summed termwise from
    /// `a^g - b^g = (a - b) (a^(g-1) + a^(g-2) b + ... + b^(g-1))` so that
    /// small changes are not lost to cancellation.
    pub fn value_change(&self, r: ArrayView1<'_, f64>, r_new: ArrayView1<'_, f64>) -> Result<f64> {
        let m = self.gamma - 1;
        let mut sum = 0.0;
        for (&b, &a) in r.iter().zip(r_new) {
            self.guard(a)?;
            let d = a - b;
            if d == 0.0 {
                continue;
            }
            let mut acc = 1.0;
            let mut bj = 1.0;
            for _ in 0..m {
                bj *= b;
                acc = acc * a + bj;
            }
            sum += d * acc;
        }
        Ok(if self.scale_by_gamma_n {
            sum / (f64::from(self.gamma) * r.len() as f64)
        } else {
            sum
        })
    }

    /// Derivative of the loss with respect to each residual, written into
    /// `out`. The gradient in `beta` is `-X^T out`.
    pub fn residual_derivative(&self, r: ArrayView1<'_, f64>, out: &mut [f64]) -> Result<()> {
        let factor = if self.scale_by_gamma_n {
            1.0 / r.len() as f64
        } else {
            f64::from(self.gamma)
        };
        for (o, &ri) in out.iter_mut().zip(r) {
            self.guard(ri)?;
            *o = factor * ipow(ri.abs(), self.gamma - 1) * ri.signum();
        }
        Ok(())
    }

    pub fn value(&self, data: &Dataset, beta: &Coefficients) -> Result<f64> {
        let r = residuals(data.x(), data.y(), beta)?;
        self.value_from_residuals(r.view())
    }

    pub fn gradient(&self, data: &Dataset, beta: &Coefficients) -> Result<Array1<f64>> {
        let r = residuals(data.x(), data.y(), beta)?;
        let mut w = vec![0.0; r.len()];
        self.residual_derivative(r.view(), &mut w)?;
        let w = ArrayView1::from(&w);
        Ok(data.x().t().dot(&w).mapv(|g| -g))
    }
}

/// `y - X beta - intercept`.
pub fn residuals(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, beta: &Coefficients) -> Result<Array1<f64>> {
    if beta.len() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            found: beta.len(),
        });
    }
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: y.len(),
        });
    }
    let pred = crate::data::predict(x, beta);
    Ok(&y - &pred)
}
