//! Matrix-free minimum-variance wavefront reconstruction.
//!
//! Shack-Hartmann slopes in the Fried geometry are inverted against a
//! turbulence prior whose covariance is factored as `K·Kᵀ` by a fractal
//! operator that, like its inverse and transposes, applies in O(N).
//! The normal equations are solved by preconditioned conjugate gradients,
//! either for the wavefront samples or for the statistically independent
//! generators `u = K⁻¹·w`.

pub mod error;
pub mod fractal;
pub mod metrics;
pub mod seeding;
pub mod sensor;
pub mod solver;
pub mod turbulence;

pub use error::{Error, Result};
pub use fractal::{FractalOperator, PhaseGrid, Transform};
pub use metrics::{FlopCounter, ResidualStats};
pub use sensor::{Pupil, SlopeSet};
pub use solver::{
    ConvergenceTrace, DiagonalPreconditioner, Preconditioner, Reconstructor, SolverConfig,
    SolverVariant, Space,
};
pub use turbulence::{StructureFunction, StructureKind};
