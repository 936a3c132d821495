//! Penalty families `p_λ(t)` on the nonnegative half-line.
//!
//! A penalized Gaussian log-likelihood subtracts `g(|β|) = n Σ_j p_λ(|β_j|)`;
//! this module supplies `p_λ` and `p'_λ`. Every family satisfies `p_λ(0) = 0`
//! and is nondecreasing. L1, SCAD and the log penalty are concave on
//! `[0, ∞)`; [`PenaltyFamily::Quadratic`] is the convex negative control used
//! by the concavity and MGF screens.

use crate::{Error, Result};

/// SCAD shape parameter used when none is given.
pub const DEFAULT_SCAD_A: f64 = 3.7;

/// Second divided differences at or below this value count as concave.
pub const CONCAVITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyFamily {
    /// `λ t`.
    L1,
    /// Smoothly clipped absolute deviation with shape `a > 2`.
    Scad { a: f64 },
    /// `λ log(1 + t / scale)`.
    Log { scale: f64 },
    /// `λ t² / 2`. Convex; only useful as a negative control.
    Quadratic,
}

/// A penalty family with its regularization scale and the sample-size
/// multiplier `n` that enters `g(u) = n Σ p_λ(u_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySpec {
    family: PenaltyFamily,
    lambda: f64,
    n: usize,
}

impl PenaltySpec {
    pub fn new(family: PenaltyFamily, lambda: f64, n: usize) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::arg(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if n == 0 {
            return Err(Error::arg("sample-size multiplier n must be >= 1"));
        }
        match family {
            PenaltyFamily::Scad { a } if !(a.is_finite() && a > 2.0) => {
                return Err(Error::arg(format!("SCAD shape a must exceed 2, got {a}")));
            }
            PenaltyFamily::Log { scale } if !(scale.is_finite() && scale > 0.0) => {
                return Err(Error::arg(format!("log-penalty scale must be > 0, got {scale}")));
            }
            _ => {}
        }
        Ok(PenaltySpec { family, lambda, n })
    }

    pub fn l1(lambda: f64) -> Result<Self> {
        Self::new(PenaltyFamily::L1, lambda, 1)
    }

    pub fn scad(lambda: f64, a: f64) -> Result<Self> {
        Self::new(PenaltyFamily::Scad { a }, lambda, 1)
    }

    /// Log penalty with its inner scale tied to `lambda`.
    pub fn log(lambda: f64) -> Result<Self> {
        Self::new(PenaltyFamily::Log { scale: lambda.max(f64::MIN_POSITIVE) }, lambda, 1)
    }

    pub fn log_with_scale(lambda: f64, scale: f64) -> Result<Self> {
        Self::new(PenaltyFamily::Log { scale }, lambda, 1)
    }

    pub fn quadratic(lambda: f64) -> Result<Self> {
        Self::new(PenaltyFamily::Quadratic, lambda, 1)
    }

    /// Same penalty with a different sample-size multiplier.
    pub fn with_n(self, n: usize) -> Result<Self> {
        Self::new(self.family, self.lambda, n)
    }

    /// Parses the CLI family names `l1`, `scad`, `log` (and `quadratic`).
    pub fn from_name(name: &str, lambda: f64, a: f64, n: usize) -> Result<Self> {
        let family = match name.to_ascii_lowercase().as_str() {
            "l1" | "lasso" => PenaltyFamily::L1,
            "scad" => PenaltyFamily::Scad { a },
            "log" => PenaltyFamily::Log { scale: lambda },
            "quadratic" => PenaltyFamily::Quadratic,
            other => return Err(Error::arg(format!("unknown penalty family '{other}'"))),
        };
        Self::new(family, lambda, n)
    }

    pub fn family(&self) -> PenaltyFamily {
        self.family
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            PenaltyFamily::L1 => "l1",
            PenaltyFamily::Scad { .. } => "scad",
            PenaltyFamily::Log { .. } => "log",
            PenaltyFamily::Quadratic => "quadratic",
        }
    }

    /// `p_λ(t)` for `t >= 0`.
    pub fn value(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::domain(format!("penalty argument must be >= 0, got {t}")));
        }
        Ok(self.value_unchecked(t))
    }

    pub(crate) fn value_unchecked(&self, t: f64) -> f64 {
        let lam = self.lambda;
        match self.family {
            PenaltyFamily::L1 => lam * t,
            PenaltyFamily::Scad { a } => {
                if t <= lam {
                    lam * t
                } else if t <= a * lam {
                    (2.0 * a * lam * t - t * t - lam * lam) / (2.0 * (a - 1.0))
                } else {
                    (a + 1.0) * lam * lam / 2.0
                }
            }
            PenaltyFamily::Log { scale } => lam * (t / scale).ln_1p(),
            PenaltyFamily::Quadratic => 0.5 * lam * t * t,
        }
    }

    /// `p'_λ(t)` for `t > 0`. The origin is excluded because the concave
    /// families have a kink there; see [`PenaltySpec::right_derivative_at_zero`].
    pub fn derivative(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!(
                "penalty derivative needs t > 0, got {t}; use the right limit at the origin"
            )));
        }
        Ok(self.slope(t))
    }

    /// `p'_λ(0+)`.
    pub fn right_derivative_at_zero(&self) -> f64 {
        match self.family {
            PenaltyFamily::L1 | PenaltyFamily::Scad { .. } => self.lambda,
            PenaltyFamily::Log { scale } => self.lambda / scale,
            PenaltyFamily::Quadratic => 0.0,
        }
    }

    /// Derivative for `t > 0`, right limit at `t = 0`.
    pub fn slope(&self, t: f64) -> f64 {
        let lam = self.lambda;
        if t <= 0.0 {
            return self.right_derivative_at_zero();
        }
        match self.family {
            PenaltyFamily::L1 => lam,
            PenaltyFamily::Scad { a } => {
                if lam == 0.0 {
                    0.0
                } else if t <= lam {
                    lam
                } else {
                    (a * lam - t).max(0.0) / (a - 1.0)
                }
            }
            PenaltyFamily::Log { scale } => lam / (scale + t),
            PenaltyFamily::Quadratic => lam * t,
        }
    }

    /// `p''_λ(t)` where it exists (`t > 0`, away from the SCAD kinks).
    pub fn curvature(&self, t: f64) -> f64 {
        let lam = self.lambda;
        match self.family {
            PenaltyFamily::L1 => 0.0,
            PenaltyFamily::Scad { a } => {
                if t <= lam || t >= a * lam {
                    0.0
                } else {
                    -1.0 / (a - 1.0)
                }
            }
            PenaltyFamily::Log { scale } => -lam / ((scale + t) * (scale + t)),
            PenaltyFamily::Quadratic => lam,
        }
    }
}

/// `p_λ(t)`; domain error for `t < 0`.
pub fn penalty_value(spec: &PenaltySpec, t: f64) -> Result<f64> {
    spec.value(t)
}

/// `p'_λ(t)`; domain error for `t <= 0`.
pub fn penalty_derivative(spec: &PenaltySpec, t: f64) -> Result<f64> {
    spec.derivative(t)
}

/// Outcome of a second-divided-difference scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    pub concave: bool,
    /// Largest second divided difference found on the grid.
    pub worst_second_difference: f64,
    /// Middle grid point of the worst triple.
    pub worst_at: f64,
}

/// Second divided difference of `f` over three increasing abscissae.
pub(crate) fn second_divided_difference(t: [f64; 3], v: [f64; 3]) -> f64 {
    let left = (v[1] - v[0]) / (t[1] - t[0]);
    let right = (v[2] - v[1]) / (t[2] - t[1]);
    2.0 * (right - left) / (t[2] - t[0])
}

/// Scans `values` sampled on `grid` for convexity violations.
pub(crate) fn scan_concavity(grid: &[f64], values: &[f64]) -> ConcavityReport {
    let mut worst = f64::NEG_INFINITY;
    let mut worst_at = grid[1];
    for k in 1..grid.len() - 1 {
        let dd = second_divided_difference(
            [grid[k - 1], grid[k], grid[k + 1]],
            [values[k - 1], values[k], values[k + 1]],
        );
        if dd > worst {
            worst = dd;
            worst_at = grid[k];
        }
    }
    ConcavityReport { concave: worst <= CONCAVITY_TOL, worst_second_difference: worst, worst_at }
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::arg(format!("grid needs at least 3 points, got {}", grid.len())));
    }
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::domain("grid points must be finite and nonnegative"));
    }
    if !crate::numeric::strictly_increasing(grid) {
        return Err(Error::arg("grid must be strictly increasing"));
    }
    Ok(())
}

/// Checks concavity of `p_λ` on `grid` via second divided differences.
pub fn concave_on_positive_axis(spec: &PenaltySpec, grid: &[f64]) -> Result<ConcavityReport> {
    validate_grid(grid)?;
    let values: Vec<f64> = grid.iter().map(|&t| spec.value_unchecked(t)).collect();
    Ok(scan_concavity(grid, &values))
}
