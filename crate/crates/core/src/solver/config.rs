use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Unknowns of the normal equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    /// Wavefront samples `w`.
    W,
    /// Generators `u = K⁻¹·w`, whose prior covariance is the identity.
    U,
}

/// Diagonal preconditioner choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preconditioner {
    None,
    /// `M = diag(A)`.
    Jacobi,
    /// `Q = diag(A_ii / Σj A_ij²)`, closest diagonal to `A⁻¹` for white unknowns.
    OptimalDiagonal,
}

/// One of the six solver variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SolverVariant {
    pub space: Space,
    pub preconditioner: Preconditioner,
}

impl SolverVariant {
    pub const ALL: [SolverVariant; 6] = [
        SolverVariant::new(Space::W, Preconditioner::None),
        SolverVariant::new(Space::W, Preconditioner::Jacobi),
        SolverVariant::new(Space::W, Preconditioner::OptimalDiagonal),
        SolverVariant::new(Space::U, Preconditioner::None),
        SolverVariant::new(Space::U, Preconditioner::Jacobi),
        SolverVariant::new(Space::U, Preconditioner::OptimalDiagonal),
    ];

    pub const fn new(space: Space, preconditioner: Preconditioner) -> Self {
        Self {
            space,
            preconditioner,
        }
    }

    pub fn is_preconditioned(&self) -> bool {
        self.preconditioner != Preconditioner::None
    }

    pub fn name(&self) -> &'static str {
        match (self.space, self.preconditioner) {
            (Space::W, Preconditioner::None) => "w-cg",
            (Space::W, Preconditioner::Jacobi) => "w-pcg-jac",
            (Space::W, Preconditioner::OptimalDiagonal) => "w-pcg-opt",
            (Space::U, Preconditioner::None) => "u-cg",
            (Space::U, Preconditioner::Jacobi) => "u-pcg-jac",
            (Space::U, Preconditioner::OptimalDiagonal) => "u-pcg-opt",
        }
    }
}

impl fmt::Display for SolverVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// Starting point of the iterations.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialGuess {
    #[default]
    Zero,
    /// Initial unknowns, in the solver's own space.
    Provided(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub variant: SolverVariant,
    pub max_iterations: usize,
    /// Stop once `‖r_k‖ ≤ tolerance · ‖b‖`.
    pub tolerance: f64,
    pub initial: InitialGuess,
}

/// Generator space with the optimal diagonal preconditioner.
impl Default for SolverVariant {
    fn default() -> Self {
        Self::new(Space::U, Preconditioner::OptimalDiagonal)
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            variant: SolverVariant::default(),
            max_iterations: 30,
            tolerance: 1e-3,
            initial: InitialGuess::Zero,
        }
    }
}

impl SolverConfig {
    pub fn new(variant: SolverVariant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_distinct_variants_round_trip_by_name() {
        let names: std::collections::HashSet<_> =
            SolverVariant::ALL.iter().map(|v| v.name()).collect();
        assert_eq!(names.len(), 6);
        for v in SolverVariant::ALL {
            assert_eq!(v.name().parse::<SolverVariant>().unwrap(), v);
        }
        assert!("u-pcg".parse::<SolverVariant>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig::default()
            .with_max_iterations(0)
            .validate()
            .is_err());
        assert!(SolverConfig::default()
            .with_tolerance(0.0)
            .validate()
            .is_err());
        assert_eq!(SolverConfig::default().max_iterations, 30);
        assert_eq!(SolverConfig::default().tolerance, 1e-3);
    }
}
