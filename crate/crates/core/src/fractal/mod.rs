//! Fractal operators: an O(N) invertible factor `K` of the prior phase
//! covariance, built by mid-point refinement on a `(2^p + 1)²` lattice.

mod coefficients;
mod grid;
mod operator;

pub use coefficients::{
    build_coefficients, covariance_system, solve_coefficients_numeric, stencil_offsets,
    structure_system, FourPointWeights, FractalCoefficients, NumericCoefficients, OuterOperator,
    ScaleCoefficients, StencilKind, TriangleWeights,
};
pub use grid::{scales_for_side, side_for_scales, PhaseGrid};
pub use operator::{FractalOperator, Transform};
