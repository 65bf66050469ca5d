//! Phase structure functions and the covariances derived from them.
//!
//! Lengths are expressed in fine-grid sampling steps and phases in radians,
//! so a Fried parameter of 1 means one subaperture per `r0`.

use crate::error::{Error, Result};

/// Kolmogorov structure-function coefficient, in rad².
pub const KOLMOGOROV_COEFFICIENT: f64 = 6.88;

/// Family of the structure function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureKind {
    /// `f(r) = 6.88 (r / r0)^(5/3)`.
    Kolmogorov,
    /// `f ≡ 0`. Only useful for degenerate-case tests.
    Null,
}

/// Stationary, isotropic phase statistics: a structure function plus the
/// per-sample variance that turns it into a covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureFunction {
    r0: f64,
    variance: f64,
    kind: StructureKind,
}

impl StructureFunction {
    /// Kolmogorov statistics over a square support of side `extent`.
    ///
    /// The variance is chosen so that the covariance between the two most
    /// distant corners of the support, `sqrt(2) * extent` apart, is zero.
    pub fn kolmogorov(r0: f64, extent: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::Domain(format!("r0 must be positive, got {r0}")));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::Domain(format!(
                "extent must be positive, got {extent}"
            )));
        }
        let mut sf = Self {
            r0,
            variance: 0.0,
            kind: StructureKind::Kolmogorov,
        };
        sf.variance = 0.5 * sf.evaluate(std::f64::consts::SQRT_2 * extent)?;
        Ok(sf)
    }

    /// Statistics with an explicit variance.
    pub fn with_variance(kind: StructureKind, r0: f64, variance: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::Domain(format!("r0 must be positive, got {r0}")));
        }
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(Error::Domain(format!(
                "variance must be nonnegative, got {variance}"
            )));
        }
        Ok(Self { r0, variance, kind })
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Per-sample phase variance σ² (rad²).
    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn kind(&self) -> StructureKind {
        self.kind
    }

    /// Expected squared phase difference between two points `r` apart.
    pub fn evaluate(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!(
                "separation must be nonnegative, got {r}"
            )));
        }
        Ok(match self.kind {
            StructureKind::Kolmogorov => KOLMOGOROV_COEFFICIENT * (r / self.r0).powf(5.0 / 3.0),
            StructureKind::Null => 0.0,
        })
    }

    /// Phase covariance between two points `r` apart: `σ² − f(r)/2`.
    pub fn covariance(&self, r: f64) -> Result<f64> {
        Ok(self.variance - 0.5 * self.evaluate(r)?)
    }
}
