//! Dense reference computations for small grids.
//!
//! These form every matrix explicitly and solve with a Cholesky
//! factorization. They exist to cross-check the matrix-free paths and are
//! limited to grids of at most [`MAX_DENSE_UNKNOWNS`] samples.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::fractal::{FractalOperator, Transform};
use crate::metrics::FlopCounter;
use crate::sensor::Pupil;

use super::system::LinearOperator;

pub const MAX_DENSE_UNKNOWNS: usize = 33 * 33;

fn check_size(n: usize) -> Result<()> {
    if n > MAX_DENSE_UNKNOWNS {
        return Err(Error::Domain(format!(
            "{n} unknowns is too many for a dense solve (max {MAX_DENSE_UNKNOWNS})"
        )));
    }
    Ok(())
}

/// Columns `A·e_i` gathered into a matrix.
pub fn assemble(op: &dyn LinearOperator) -> Result<DMatrix<f64>> {
    let n = op.dim();
    check_size(n)?;
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    let mut flops = FlopCounter::new();
    for i in 0..n {
        e[i] = 1.0;
        op.apply(&e, &mut col, &mut flops)?;
        e[i] = 0.0;
        m.set_column(i, &DVector::from_column_slice(&col));
    }
    Ok(m)
}

/// Matrix of one transform of the fractal operator.
pub fn fractal_matrix(fractal: &FractalOperator, transform: Transform) -> Result<DMatrix<f64>> {
    let n = fractal.len();
    check_size(n)?;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        fractal.apply(transform, &mut e)?;
        m.set_column(i, &DVector::from_column_slice(&e));
    }
    Ok(m)
}

/// Fried-geometry slope matrix, written out entry by entry.
pub fn slope_matrix(pupil: &Pupil) -> DMatrix<f64> {
    let n = pupil.side();
    let mut s = DMatrix::zeros(pupil.num_measurements(), n * n);
    for (k, (ix, iy)) in pupil.subaperture_positions().enumerate() {
        let w00 = iy * n + ix;
        let w10 = w00 + 1;
        let w01 = w00 + n;
        let w11 = w01 + 1;
        for (j, sign) in [
            (w00, [-0.5, -0.5]),
            (w10, [0.5, -0.5]),
            (w01, [-0.5, 0.5]),
            (w11, [0.5, 0.5]),
        ] {
            s[(2 * k, j)] = sign[0];
            s[(2 * k + 1, j)] = sign[1];
        }
    }
    s
}

/// Minimum-variance estimate `(Sᵀ·C_e⁻¹·S + C⁻¹)⁻¹·Sᵀ·C_e⁻¹·d` with the
/// prior covariance `C = K·Kᵀ` formed explicitly.
pub fn reference_solve(
    pupil: &Pupil,
    fractal: &FractalOperator,
    weights: &[f64],
    slopes: &[f64],
) -> Result<Vec<f64>> {
    check_len(fractal.side(), pupil.side())?;
    check_len(pupil.num_measurements(), weights.len())?;
    check_len(weights.len(), slopes.len())?;
    let k = fractal_matrix(fractal, Transform::Forward)?;
    let c = &k * k.transpose();
    let c_inv = c
        .cholesky()
        .ok_or_else(|| Error::Singular("prior covariance is not positive definite".into()))?
        .inverse();
    let s = slope_matrix(pupil);
    let w = DMatrix::from_diagonal(&DVector::from_column_slice(weights));
    let st_w = s.transpose() * w;
    let lhs = &st_w * &s + c_inv;
    let rhs = st_w * DVector::from_column_slice(slopes);
    let chol = lhs
        .cholesky()
        .ok_or_else(|| Error::Singular("normal equations are not positive definite".into()))?;
    Ok(chol.solve(&rhs).as_slice().to_vec())
}
