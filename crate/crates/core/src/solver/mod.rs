//! Normal equations, diagonal preconditioners and conjugate gradients.

mod config;
pub mod dense;
mod pcg;
mod precond;
mod reconstruct;
mod system;

pub use config::{InitialGuess, Preconditioner, SolverConfig, SolverVariant, Space};
pub use pcg::{pcg_solve, ConvergenceTrace, Monitor, StopReason, TraceRow};
pub use precond::{
    build_jacobi, build_optimal_diagonal, build_preconditioner, load_or_build, operator_diagonals,
    CacheKey, DiagonalPreconditioner,
};
pub use reconstruct::{fractal_share, measure_operator_flops, Reconstruction, Reconstructor};
pub use system::{LinearOperator, NormalEquations};
