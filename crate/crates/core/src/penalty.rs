//! Penalty functions, their derivatives, and the scalar thresholding
//! operator used by coordinate descent.
//!
//! SCAD follows the usual three-piece form with shape parameter a > 2:
//! linear up to lambda, quadratic blend on (lambda, a*lambda], then flat.
//! The derivative vanishes beyond a*lambda, which is what spares large
//! coefficients from shrinkage; LASSO keeps the constant slope lambda
//! everywhere.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

pub const DEFAULT_SCAD_A: f64 = 3.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PenaltyFamily {
    None,
    Lasso,
    Scad,
}

impl fmt::Display for PenaltyFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PenaltyFamily::None => "none",
            PenaltyFamily::Lasso => "lasso",
            PenaltyFamily::Scad => "scad",
        };
        f.write_str(s)
    }
}

/// A penalty family with its tuning parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub family: PenaltyFamily,
    pub lambda: f64,
    /// SCAD shape parameter; ignored by the other families.
    pub scad_a: f64,
}

impl PenaltySpec {
    pub fn new(family: PenaltyFamily, lambda: f64) -> Result<Self> {
        Self::with_scad_a(family, lambda, DEFAULT_SCAD_A)
    }

    pub fn with_scad_a(family: PenaltyFamily, lambda: f64, scad_a: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidInput(format!("lambda must be >= 0, got {lambda}")));
        }
        if family == PenaltyFamily::Scad && !(scad_a > 2.0) {
            return Err(Error::InvalidInput(format!("SCAD a must be > 2, got {scad_a}")));
        }
        Ok(Self { family, lambda, scad_a })
    }

    pub fn none() -> Self {
        Self { family: PenaltyFamily::None, lambda: 0.0, scad_a: DEFAULT_SCAD_A }
    }

    pub fn lasso(lambda: f64) -> Result<Self> {
        Self::new(PenaltyFamily::Lasso, lambda)
    }

    pub fn scad(lambda: f64) -> Result<Self> {
        Self::new(PenaltyFamily::Scad, lambda)
    }

    /// Same family and shape at a different tuning value.
    pub fn at_lambda(&self, lambda: f64) -> Result<Self> {
        Self::with_scad_a(self.family, lambda, self.scad_a)
    }

    /// p_lambda(t) for t >= 0.
    pub fn value(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::NegativeArgument(t));
        }
        let lam = self.lambda;
        Ok(match self.family {
            PenaltyFamily::None => 0.0,
            PenaltyFamily::Lasso => lam * t,
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
        })
    }

    /// q_lambda(t) = dp_lambda/dt for t > 0, with the left-continuous value at
    /// the SCAD kinks.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::NonpositiveArgument(t));
        }
        let lam = self.lambda;
        Ok(match self.family {
            PenaltyFamily::None => 0.0,
            PenaltyFamily::Lasso => lam,
            PenaltyFamily::Scad => {
                let a = self.scad_a;
                if t <= lam {
                    lam
                } else {
                    (a * lam - t).max(0.0) / (a - 1.0)
                }
            }
        })
    }

    /// Right limit of the derivative at zero; the subgradient bound that keeps
    /// a coordinate at exactly zero.
    pub fn derivative_at_zero_plus(&self) -> f64 {
        match self.family {
            PenaltyFamily::None => 0.0,
            PenaltyFamily::Lasso | PenaltyFamily::Scad => self.lambda,
        }
    }

    /// argmin_u [ v (u - z)^2 / 2 + p_lambda(|u|) ] for curvature v > 0.
    ///
    /// The scalar objective is piecewise quadratic with breakpoints at 0,
    /// lambda and a*lambda, so the exact minimizer is found by comparing the
    /// stationary point of each piece (where valid) with the breakpoints.
    /// Exact zeros come out as exact zeros.
    pub fn threshold(&self, z: f64, v: f64) -> Result<f64> {
        if !(v > 0.0) {
            return Err(Error::NonpositiveCurvature(v));
        }
        let lam = self.lambda;
        Ok(match self.family {
            PenaltyFamily::None => z,
            PenaltyFamily::Lasso => soft_threshold(z, lam / v),
            PenaltyFamily::Scad => {
                if lam == 0.0 {
                    return Ok(z);
                }
                let a = self.scad_a;
                let zs = z.abs();
                // Minimizer shares the sign of z; work on u >= 0.
                let objective = |u: f64| {
                    0.5 * v * (u - zs) * (u - zs) + self.value(u).expect("u >= 0")
                };
                let mut candidates: [f64; 6] = [0.0, lam, a * lam, f64::NAN, f64::NAN, f64::NAN];
                let mut m = 3;
                // Piece 1: u in [0, lam], slope v(u - zs) + lam.
                let u1 = zs - lam / v;
                if u1 > 0.0 && u1 < lam {
                    candidates[m] = u1;
                    m += 1;
                }
                // Piece 2: u in (lam, a*lam]; stationary point only when the
                // piece is convex, i.e. v(a-1) > 1.
                let denom = v * (a - 1.0) - 1.0;
                if denom > 0.0 {
                    let u2 = (v * (a - 1.0) * zs - a * lam) / denom;
                    if u2 > lam && u2 < a * lam {
                        candidates[m] = u2;
                        m += 1;
                    }
                }
                // Piece 3: u > a*lam, flat penalty.
                if zs > a * lam {
                    candidates[m] = zs;
                    m += 1;
                }
                let mut best = candidates[0];
                let mut best_obj = objective(best);
                for &u in &candidates[1..m] {
                    let obj = objective(u);
                    if obj < best_obj {
                        best = u;
                        best_obj = obj;
                    }
                }
                if best == 0.0 {
                    0.0
                } else {
                    best * z.signum()
                }
            }
        })
    }
}

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}
