//! Interpolation weights of the mid-point refinement.
//!
//! Each new sample is `w0 = α0·u0 + Σ αj·wj` over a handful of parents.
//! The weights are fixed by requiring every new sample to have variance σ²
//! and the prescribed covariance with each parent, which reduces to a small
//! symmetric linear system per stencil. The three stencils used on the
//! lattice have closed-form solutions, evaluated in [`build_coefficients`];
//! [`solve_coefficients_numeric`] solves the same system generically and is
//! kept as an independent cross-check.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::turbulence::StructureFunction;

/// Refinement stencil shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilKind {
    /// Cell center from the 4 cell corners, `r/√2` away.
    Square,
    /// Boundary edge midpoint from the 2 edge ends and the adjacent cell center.
    Triangle,
    /// Interior edge midpoint from the 2 edge ends and the 2 adjacent cell centers.
    Diamond,
}

/// Weights for a stencil whose parents all share one weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourPointWeights {
    /// α0, the innovation weight.
    pub innovation: f64,
    /// Common weight of the 4 parents.
    pub parent: f64,
}

/// Weights for the boundary stencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleWeights {
    pub innovation: f64,
    /// Weight of each of the two edge ends.
    pub edge: f64,
    /// Weight of the interior cell center.
    pub interior: f64,
}

/// Weights for one refinement step, from parent cell size `cell` to `cell / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleCoefficients {
    /// Parent cell size in grid steps.
    pub cell: usize,
    pub square: FourPointWeights,
    pub triangle: TriangleWeights,
    pub diamond: FourPointWeights,
}

/// The 4×4 map from the first four generators to the corner samples.
///
/// Corners are numbered counter-clockwise from `(0, 0)`: 1 = `(0,0)`,
/// 2 = `(D,0)`, 3 = `(D,D)`, 4 = `(0,D)`. Its columns are the piston,
/// waffle, tip and tilt modes of the corner covariance, scaled by the
/// square roots of their eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterOperator {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub forward: [[f64; 4]; 4],
    pub inverse: [[f64; 4]; 4],
}

impl OuterOperator {
    pub fn new(sf: &StructureFunction, extent: f64) -> Result<Self> {
        let var = sf.variance();
        let f_side = sf.evaluate(extent)?;
        let f_diag = sf.evaluate(SQRT_2 * extent)?;
        let a2 = 4.0 * var - f_side - 0.5 * f_diag;
        let b2 = f_side - 0.5 * f_diag;
        let c2 = f_diag;
        for (name, v) in [("piston", a2), ("waffle", b2), ("tip/tilt", c2)] {
            if !(v > 0.0) {
                return Err(Error::Construction(format!(
                    "outer {name} eigenvalue must be positive, got {v:e}"
                )));
            }
        }
        let (a, b, c) = (a2.sqrt(), b2.sqrt(), c2.sqrt());
        let forward = [
            [0.5 * a, -0.5 * b, -0.5 * c, 0.0],
            [0.5 * a, 0.5 * b, 0.0, -0.5 * c],
            [0.5 * a, -0.5 * b, 0.5 * c, 0.0],
            [0.5 * a, 0.5 * b, 0.0, 0.5 * c],
        ];
        let (ia, ib, ic) = (0.5 / a, 0.5 / b, 1.0 / c);
        let inverse = [
            [ia, ia, ia, ia],
            [-ib, ib, -ib, ib],
            [-ic, 0.0, ic, 0.0],
            [0.0, -ic, 0.0, ic],
        ];
        Ok(Self {
            a,
            b,
            c,
            forward,
            inverse,
        })
    }

    /// Covariance of the four corners implied by the statistics.
    pub fn corner_covariance(sf: &StructureFunction, extent: f64) -> Result<[[f64; 4]; 4]> {
        let c0 = sf.covariance(0.0)?;
        let c1 = sf.covariance(extent)?;
        let c2 = sf.covariance(SQRT_2 * extent)?;
        Ok([
            [c0, c1, c2, c1],
            [c1, c0, c1, c2],
            [c2, c1, c0, c1],
            [c1, c2, c1, c0],
        ])
    }
}

/// Coefficients for every refinement step plus the outer corner operator.
#[derive(Debug, Clone, PartialEq)]
pub struct FractalCoefficients {
    pub outer: OuterOperator,
    /// Ordered from the coarsest refinement (cell = `2^p`) to the finest (cell = 2).
    pub scales: Vec<ScaleCoefficients>,
}

/// Closed-form weights for 4 parents at the corners of a square, from the
/// variance and the structure function at the new-to-parent distance `g`,
/// between adjacent parents `a` and between opposite parents `d`.
/// Returns the parent weight and α0².
///
/// The expressions are rearranged so that σ² never cancels against itself.
pub(crate) fn square_closed_form(var: f64, g: f64, a: f64, d: f64) -> (f64, f64) {
    let den = 4.0 * var - a - 0.5 * d;
    let parent = (var - 0.5 * g) / den;
    let radicand = (var * (4.0 * g - a - 0.5 * d) - g * g) / den;
    (parent, radicand)
}

/// Closed-form triangle weights from the variance and `f1 = f(r/2)`,
/// `f2 = f(r/√2)`, `f3 = f(r)`. Returns `(edge, interior, α0²)`.
pub(crate) fn triangle_closed_form(var: f64, f1: f64, f2: f64, f3: f64) -> (f64, f64, f64) {
    let t = 2.0 * f2 - 0.5 * f3;
    let den = var * t - 0.5 * f2 * f2;
    let c1 = var - 0.5 * f1;
    let edge = c1 * 0.5 * f2 / den;
    let interior = c1 * (f2 - 0.5 * f3) / den;
    let radicand = (var * (f1 * t - 0.5 * f2 * f2) - 0.25 * f1 * f1 * t) / den;
    (edge, interior, radicand)
}

fn innovation(radicand: f64, what: &str, cell: usize) -> Result<f64> {
    if radicand > 0.0 && radicand.is_finite() {
        Ok(radicand.sqrt())
    } else {
        Err(Error::Construction(format!(
            "{what} innovation variance at cell size {cell} is {radicand:e}; must be > 0"
        )))
    }
}

/// Closed-form weights for every refinement of a grid with `scales` levels.
pub fn build_coefficients(sf: &StructureFunction, scales: u32) -> Result<FractalCoefficients> {
    if scales == 0 {
        return Err(Error::Config("at least one scale is required".into()));
    }
    let extent = (1usize << scales) as f64;
    let outer = OuterOperator::new(sf, extent)?;
    let mut levels = Vec::with_capacity(scales as usize);
    for level in (1..=scales).rev() {
        let cell = 1usize << level;
        let r = cell as f64;
        let var = sf.variance();
        let f1 = sf.evaluate(0.5 * r)?;
        let f2 = sf.evaluate(r / SQRT_2)?;
        let f3 = sf.evaluate(r)?;
        let f4 = sf.evaluate(SQRT_2 * r)?;

        let (parent, rad) = square_closed_form(var, f2, f3, f4);
        let square = FourPointWeights {
            innovation: innovation(rad, "square", cell)?,
            parent,
        };

        let (edge, interior, rad) = triangle_closed_form(var, f1, f2, f3);
        let triangle = TriangleWeights {
            innovation: innovation(rad, "triangle", cell)?,
            edge,
            interior,
        };

        // square stencil at r/√2
        let (parent, rad) = square_closed_form(var, f1, f2, f3);
        let diamond = FourPointWeights {
            innovation: innovation(rad, "diamond", cell)?,
            parent,
        };

        levels.push(ScaleCoefficients {
            cell,
            square,
            triangle,
            diamond,
        });
    }
    Ok(FractalCoefficients {
        outer,
        scales: levels,
    })
}

/// Parent positions relative to the new sample, for a parent cell of size `cell`.
///
/// Triangle parents are listed edge ends first, interior center last.
pub fn stencil_offsets(kind: StencilKind, cell: f64) -> Vec<(f64, f64)> {
    let h = 0.5 * cell;
    match kind {
        StencilKind::Square => vec![(-h, -h), (h, -h), (h, h), (-h, h)],
        StencilKind::Triangle => vec![(-h, 0.0), (h, 0.0), (0.0, h)],
        StencilKind::Diamond => vec![(-h, 0.0), (0.0, -h), (h, 0.0), (0.0, h)],
    }
}

/// Structure function between every pair of parents and between the new
/// sample and each parent, built directly from parent positions.
pub fn structure_system(
    sf: &StructureFunction,
    kind: StencilKind,
    cell: f64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    system_from(kind, cell, |r| sf.evaluate(r))
}

/// Parent covariance matrix and new-to-parent covariances for a stencil.
pub fn covariance_system(
    sf: &StructureFunction,
    kind: StencilKind,
    cell: f64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    system_from(kind, cell, |r| sf.covariance(r))
}

fn system_from(
    kind: StencilKind,
    cell: f64,
    value: impl Fn(f64) -> Result<f64>,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let pts = stencil_offsets(kind, cell);
    let dist = |p: (f64, f64), q: (f64, f64)| (p.0 - q.0).hypot(p.1 - q.1);
    let mut parents = vec![vec![0.0; pts.len()]; pts.len()];
    for (i, &p) in pts.iter().enumerate() {
        for (j, &q) in pts.iter().enumerate() {
            parents[i][j] = value(dist(p, q))?;
        }
    }
    let cross = pts
        .iter()
        .map(|&p| value(dist(p, (0.0, 0.0))))
        .collect::<Result<_>>()?;
    Ok((parents, cross))
}

/// Generic solution of the weight system for an arbitrary stencil.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericCoefficients {
    pub weights: Vec<f64>,
    pub innovation: f64,
}

/// Solves `Σj C_ij αj = C_0i` with `C = σ² − F/2`, then
/// `α0² = σ² − Σj C_0j αj`, given the structure-function values `F`
/// between parents and `g` from the new sample to each parent.
///
/// With `μ = σ²(Σα − 1)` the system becomes the bordered system
/// `F·α − 2μ·1 = g`, `Σα − μ/σ² = 1`, and `α0² = g·α/2 − μ`, which avoids
/// subtracting quantities of order σ².
pub fn solve_coefficients_numeric(
    parent_structure: &[Vec<f64>],
    cross_structure: &[f64],
    sigma2: f64,
) -> Result<NumericCoefficients> {
    let n = cross_structure.len();
    if parent_structure.len() != n || parent_structure.iter().any(|row| row.len() != n) {
        return Err(Error::Shape {
            expected: n,
            actual: parent_structure.len(),
        });
    }
    if !(sigma2 > 0.0) {
        return Err(Error::Domain(format!(
            "variance must be positive, got {sigma2}"
        )));
    }
    let m = DMatrix::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
        (true, true) => parent_structure[i][j],
        (true, false) => -2.0,
        (false, true) => 1.0,
        (false, false) => -1.0 / sigma2,
    });
    let mut rhs = DVector::from_element(n + 1, 1.0);
    rhs.rows_mut(0, n).copy_from_slice(cross_structure);
    let sol = m
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular("stencil system is singular".into()))?;
    let alpha: Vec<f64> = sol.iter().take(n).copied().collect();
    let mu = sol[n];
    let radicand = 0.5
        * alpha
            .iter()
            .zip(cross_structure)
            .map(|(a, g)| a * g)
            .sum::<f64>()
        - mu;
    if !(radicand > 0.0) {
        return Err(Error::NegativeRadicand { radicand });
    }
    Ok(NumericCoefficients {
        weights: alpha,
        innovation: radicand.sqrt(),
    })
}
