//! Separable penalties: value, derivatives in `|beta_j|`, and the scalar
//! proximal map applied elementwise.

use ndarray::{Array1, ArrayView1};
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_SCAD_A: f64 = 3.7;
pub const DEFAULT_MCP_GAMMA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyFamily {
    None,
    L1,
    Scad,
    Mcp,
}

impl std::str::FromStr for PenaltyFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(PenaltyFamily::None),
            "l1" | "lasso" => Ok(PenaltyFamily::L1),
            "scad" => Ok(PenaltyFamily::Scad),
            "mcp" => Ok(PenaltyFamily::Mcp),
            other => Err(Error::InvalidConfig(format!("unknown penalty `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PenaltySpec {
    pub family: PenaltyFamily,
    pub lambda: f64,
    pub scad_a: f64,
    pub mcp_gamma: f64,
}

impl PenaltySpec {
    pub fn new(family: PenaltyFamily, lambda: f64) -> Self {
        Self {
            family,
            lambda,
            scad_a: DEFAULT_SCAD_A,
            mcp_gamma: DEFAULT_MCP_GAMMA,
        }
    }

    pub fn none() -> Self {
        Self::new(PenaltyFamily::None, 0.0)
    }

    pub fn l1(lambda: f64) -> Self {
        Self::new(PenaltyFamily::L1, lambda)
    }

    pub fn scad(lambda: f64) -> Self {
        Self::new(PenaltyFamily::Scad, lambda)
    }

    pub fn mcp(lambda: f64) -> Self {
        Self::new(PenaltyFamily::Mcp, lambda)
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if self.family == PenaltyFamily::Scad && !(self.scad_a > 2.0) {
            return Err(Error::InvalidConfig("SCAD parameter a must exceed 2".into()));
        }
        if self.family == PenaltyFamily::Mcp && !(self.mcp_gamma > 1.0) {
            return Err(Error::InvalidConfig("MCP parameter gamma must exceed 1".into()));
        }
        Ok(())
    }

    /// Penalty of a single coefficient, `p_lambda(|b|)`.
    pub fn value_scalar(&self, b: f64) -> f64 {
        let lam = self.lambda;
        let t = b.abs();
        match self.family {
            PenaltyFamily::None => 0.0,
            PenaltyFamily::L1 => lam * t,
            PenaltyFamily::Scad => {
                let a = self.scad_a;
                if t <= lam {
                    lam * t
                } else if t <= a * lam {
                    (2.0 * a * lam * t - t * t - lam * lam) / (2.0 * (a - 1.0))
                } else {
                    lam * lam * (a + 1.0) / 2.0
                }
            }
            PenaltyFamily::Mcp => {
                let g = self.mcp_gamma;
                if t <= g * lam {
                    lam * t - t * t / (2.0 * g)
                } else {
                    g * lam * lam / 2.0
                }
            }
        }
    }

    pub fn value(&self, beta: ArrayView1<'_, f64>) -> f64 {
        if self.family == PenaltyFamily::None {
            return 0.0;
        }
        beta.iter().map(|&b| self.value_scalar(b)).sum()
    }

    /// First and second derivatives of `p_lambda` at `|beta_j|`.
    pub fn derivatives(&self, beta_j: f64) -> Result<(f64, f64)> {
        if beta_j == 0.0 {
            return Err(Error::ZeroCoefficient);
        }
        let lam = self.lambda;
        let t = beta_j.abs();
        Ok(match self.family {
            PenaltyFamily::None => (0.0, 0.0),
            PenaltyFamily::L1 => (lam, 0.0),
            PenaltyFamily::Scad => {
                let a = self.scad_a;
                if t <= lam {
                    (lam, 0.0)
                } else if t <= a * lam {
                    ((a * lam - t) / (a - 1.0), -1.0 / (a - 1.0))
                } else {
                    (0.0, 0.0)
                }
            }
            PenaltyFamily::Mcp => {
                let g = self.mcp_gamma;
                if t <= g * lam {
                    (lam - t / g, -1.0 / g)
                } else {
                    (0.0, 0.0)
                }
            }
        })
    }

    /// `argmin_z (1/(2 step)) (z - v)^2 + p_lambda(|z|)`.
    pub fn prox_scalar(&self, v: f64, step: f64) -> f64 {
        let lam = self.lambda;
        let av = v.abs();
        let sgn = v.signum();
        match self.family {
            PenaltyFamily::None => v,
            PenaltyFamily::L1 => soft_threshold(v, step * lam),
            PenaltyFamily::Scad => {
                let a = self.scad_a;
                if step < a - 1.0 {
                    if av <= lam * (1.0 + step) {
                        soft_threshold(v, step * lam)
                    } else if av <= a * lam {
                        ((a - 1.0) * v - sgn * a * step * lam) / (a - 1.0 - step)
                    } else {
                        v
                    }
                } else {
                    self.prox_by_candidates(v, step)
                }
            }
            PenaltyFamily::Mcp => {
                let g = self.mcp_gamma;
                if step < g {
                    if av <= step * lam {
                        0.0
                    } else if av <= g * lam {
                        sgn * (av - step * lam) / (1.0 - step / g)
                    } else {
                        v
                    }
                } else {
                    self.prox_by_candidates(v, step)
                }
            }
        }
    }

    /// Nonconvex regime (large step): compare the stationary point of every
    /// piece, clamped to its interval, and keep the best.
    fn prox_by_candidates(&self, v: f64, step: f64) -> f64 {
        let lam = self.lambda;
        let av = v.abs();
        let sgn = v.signum();
        let obj = |z: f64| (z - v) * (z - v) / (2.0 * step) + self.value_scalar(z);
        let mut cands = vec![0.0, v, sgn * (av - step * lam).clamp(0.0, lam)];
        match self.family {
            PenaltyFamily::Scad => {
                let a = self.scad_a;
                cands.push(sgn * lam);
                cands.push(sgn * a * lam);
                let denom = a - 1.0 - step;
                if denom != 0.0 {
                    let z = ((a - 1.0) * av - a * step * lam) / denom;
                    cands.push(sgn * z.clamp(lam, a * lam));
                }
                cands.push(sgn * av.max(a * lam));
            }
            PenaltyFamily::Mcp => {
                let g = self.mcp_gamma;
                cands.push(sgn * g * lam);
                let denom = 1.0 - step / g;
                if denom != 0.0 {
                    cands.push(sgn * ((av - step * lam) / denom).clamp(0.0, g * lam));
                }
                cands.push(sgn * av.max(g * lam));
            }
            _ => {}
        }
        cands
            .into_iter()
            .fold((0.0, f64::INFINITY), |(bz, bo), z| {
                let o = obj(z);
                if o < bo {
                    (z, o)
                } else {
                    (bz, bo)
                }
            })
            .0
    }

    pub fn prox(&self, v: ArrayView1<'_, f64>, step: f64) -> Array1<f64> {
        v.mapv(|vi| self.prox_scalar(vi, step))
    }
}

#[inline]
pub fn soft_threshold(v: f64, thresh: f64) -> f64 {
    if v > thresh {
        v - thresh
    } else if v < -thresh {
        v + thresh
    } else {
        0.0
    }
}
