use rand::Rng;
use rand_distr::StandardNormal;

use super::coefficients::{
    build_coefficients, FractalCoefficients, OuterOperator, ScaleCoefficients,
};
use super::grid::{scales_for_side, PhaseGrid};
use crate::error::{check_len, Result};
use crate::turbulence::StructureFunction;

/// Flops spent per refined sample by any of the four operators.
const STENCIL_FLOPS: u64 = 6;
/// Flops spent by the factored 4×4 corner transform.
const OUTER_FLOPS: u64 = 10;

/// Which of the four fractal operators to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// `w = K·u`
    Forward,
    /// `u = K⁻¹·w`
    Inverse,
    /// `Kᵀ·v`
    Transpose,
    /// `K⁻ᵀ·v`
    InverseTranspose,
}

/// The fractal operator `K` with `K·Kᵀ` approximating the prior phase
/// covariance, together with its inverse and transposes.
///
/// All four are applied in place in O(N). Refined samples are produced
/// coarse to fine; within a scale the cell centers are done first since the
/// edge-midpoint stencils use them as parents.
#[derive(Debug, Clone)]
pub struct FractalOperator {
    side: usize,
    structure: StructureFunction,
    coefficients: FractalCoefficients,
}

enum Edge {
    Triangle {
        target: usize,
        ends: [usize; 2],
        interior: usize,
    },
    Diamond {
        target: usize,
        parents: [usize; 4],
    },
}

fn for_each_center(side: usize, cell: usize, mut f: impl FnMut(usize, [usize; 4])) {
    let h = cell / 2;
    for y in (h..side).step_by(cell) {
        for x in (h..side).step_by(cell) {
            let t = y * side + x;
            f(
                t,
                [
                    t - h * side - h,
                    t - h * side + h,
                    t + h * side + h,
                    t + h * side - h,
                ],
            );
        }
    }
}

fn for_each_edge(side: usize, cell: usize, mut f: impl FnMut(Edge)) {
    let h = cell / 2;
    let last = side - 1;
    // horizontal edges
    for y in (0..side).step_by(cell) {
        for x in (h..side).step_by(cell) {
            let t = y * side + x;
            let ends = [t - h, t + h];
            if y == 0 {
                f(Edge::Triangle {
                    target: t,
                    ends,
                    interior: t + h * side,
                });
            } else if y == last {
                f(Edge::Triangle {
                    target: t,
                    ends,
                    interior: t - h * side,
                });
            } else {
                f(Edge::Diamond {
                    target: t,
                    parents: [t - h, t - h * side, t + h, t + h * side],
                });
            }
        }
    }
    // vertical edges
    for y in (h..side).step_by(cell) {
        for x in (0..side).step_by(cell) {
            let t = y * side + x;
            let ends = [t - h * side, t + h * side];
            if x == 0 {
                f(Edge::Triangle {
                    target: t,
                    ends,
                    interior: t + h,
                });
            } else if x == last {
                f(Edge::Triangle {
                    target: t,
                    ends,
                    interior: t - h,
                });
            } else {
                f(Edge::Diamond {
                    target: t,
                    parents: [t - h, t - h * side, t + h, t + h * side],
                });
            }
        }
    }
}

impl FractalOperator {
    /// Operator for a grid of side `2^p + 1` under the given statistics.
    pub fn new(structure: StructureFunction, side: usize) -> Result<Self> {
        let scales = scales_for_side(side)?;
        let coefficients = build_coefficients(&structure, scales)?;
        Ok(Self {
            side,
            structure,
            coefficients,
        })
    }

    /// Kolmogorov operator whose support spans the whole grid, with the
    /// variance chosen so the most distant corners are uncorrelated.
    pub fn kolmogorov(r0: f64, side: usize) -> Result<Self> {
        scales_for_side(side)?;
        Self::new(StructureFunction::kolmogorov(r0, (side - 1) as f64)?, side)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.side * self.side
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn structure(&self) -> &StructureFunction {
        &self.structure
    }

    pub fn coefficients(&self) -> &FractalCoefficients {
        &self.coefficients
    }

    /// Flat indices of corners 1..4 (counter-clockwise from the origin).
    pub fn corners(&self) -> [usize; 4] {
        let n = self.side;
        [0, n - 1, n * n - 1, (n - 1) * n]
    }

    /// Flop count of one application of any of the four operators.
    pub fn flops_per_application(&self) -> u64 {
        STENCIL_FLOPS * self.len() as u64 - 14
    }

    /// Applies `transform` in place and returns the flops spent.
    pub fn apply(&self, transform: Transform, values: &mut [f64]) -> Result<u64> {
        check_len(self.len(), values.len())?;
        Ok(match transform {
            Transform::Forward => self.forward(values),
            Transform::Inverse => self.inverse(values),
            Transform::Transpose => self.transpose(values),
            Transform::InverseTranspose => self.inverse_transpose(values),
        })
    }

    pub fn apply_k(&self, grid: &mut PhaseGrid) -> Result<u64> {
        self.apply(Transform::Forward, grid.values_mut())
    }

    pub fn apply_k_inverse(&self, grid: &mut PhaseGrid) -> Result<u64> {
        self.apply(Transform::Inverse, grid.values_mut())
    }

    pub fn apply_k_transpose(&self, grid: &mut PhaseGrid) -> Result<u64> {
        self.apply(Transform::Transpose, grid.values_mut())
    }

    pub fn apply_k_inverse_transpose(&self, grid: &mut PhaseGrid) -> Result<u64> {
        self.apply(Transform::InverseTranspose, grid.values_mut())
    }

    /// Draws generators `u ~ N(0, I)` and returns the screen `K·u`.
    pub fn generate_screen<R: Rng + ?Sized>(&self, rng: &mut R) -> PhaseGrid {
        let mut values: Vec<f64> = (0..self.len())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        self.forward(&mut values);
        PhaseGrid::from_values(self.side, values).expect("generated screen has grid shape")
    }

    fn forward(&self, v: &mut [f64]) -> u64 {
        let mut flops = self.outer_forward(v);
        for sc in &self.coefficients.scales {
            flops += self.refine(sc, v);
        }
        flops
    }

    fn refine(&self, sc: &ScaleCoefficients, v: &mut [f64]) -> u64 {
        let mut count = 0u64;
        let sq = sc.square;
        for_each_center(self.side, sc.cell, |t, p| {
            v[t] = sq.innovation * v[t] + sq.parent * (v[p[0]] + v[p[1]] + v[p[2]] + v[p[3]]);
            count += 1;
        });
        let (tr, di) = (sc.triangle, sc.diamond);
        for_each_edge(self.side, sc.cell, |e| {
            match e {
                Edge::Triangle {
                    target: t,
                    ends,
                    interior,
                } => {
                    v[t] = tr.innovation * v[t]
                        + tr.edge * (v[ends[0]] + v[ends[1]])
                        + tr.interior * v[interior];
                }
                Edge::Diamond {
                    target: t,
                    parents: p,
                } => {
                    v[t] =
                        di.innovation * v[t] + di.parent * (v[p[0]] + v[p[1]] + v[p[2]] + v[p[3]]);
                }
            }
            count += 1;
        });
        count * STENCIL_FLOPS
    }

    fn inverse(&self, v: &mut [f64]) -> u64 {
        let mut flops = 0;
        for sc in self.coefficients.scales.iter().rev() {
            let mut count = 0u64;
            let (tr, di) = (sc.triangle, sc.diamond);
            let (tr0, di0) = (1.0 / tr.innovation, 1.0 / di.innovation);
            let (tre, tri, dip) = (tr.edge * tr0, tr.interior * tr0, di.parent * di0);
            for_each_edge(self.side, sc.cell, |e| {
                match e {
                    Edge::Triangle {
                        target: t,
                        ends,
                        interior,
                    } => {
                        v[t] = tr0 * v[t] - tre * (v[ends[0]] + v[ends[1]]) - tri * v[interior];
                    }
                    Edge::Diamond {
                        target: t,
                        parents: p,
                    } => {
                        v[t] = di0 * v[t] - dip * (v[p[0]] + v[p[1]] + v[p[2]] + v[p[3]]);
                    }
                }
                count += 1;
            });
            let sq0 = 1.0 / sc.square.innovation;
            let sqp = sc.square.parent * sq0;
            for_each_center(self.side, sc.cell, |t, p| {
                v[t] = sq0 * v[t] - sqp * (v[p[0]] + v[p[1]] + v[p[2]] + v[p[3]]);
                count += 1;
            });
            flops += count * STENCIL_FLOPS;
        }
        flops + self.outer_inverse(v)
    }

    fn transpose(&self, z: &mut [f64]) -> u64 {
        let mut flops = 0;
        for sc in self.coefficients.scales.iter().rev() {
            let mut count = 0u64;
            let (tr, di) = (sc.triangle, sc.diamond);
            for_each_edge(self.side, sc.cell, |e| {
                match e {
                    Edge::Triangle {
                        target: t,
                        ends,
                        interior,
                    } => {
                        let s = tr.edge * z[t];
                        z[ends[0]] += s;
                        z[ends[1]] += s;
                        z[interior] += tr.interior * z[t];
                        z[t] *= tr.innovation;
                    }
                    Edge::Diamond {
                        target: t,
                        parents: p,
                    } => {
                        let s = di.parent * z[t];
                        for &j in &p {
                            z[j] += s;
                        }
                        z[t] *= di.innovation;
                    }
                }
                count += 1;
            });
            let sq = sc.square;
            for_each_center(self.side, sc.cell, |t, p| {
                let s = sq.parent * z[t];
                for &j in &p {
                    z[j] += s;
                }
                z[t] *= sq.innovation;
                count += 1;
            });
            flops += count * STENCIL_FLOPS;
        }
        flops + self.outer_transpose(z)
    }

    fn inverse_transpose(&self, z: &mut [f64]) -> u64 {
        let mut flops = self.outer_inverse_transpose(z);
        for sc in &self.coefficients.scales {
            let mut count = 0u64;
            let sq0 = 1.0 / sc.square.innovation;
            let sqp = sc.square.parent;
            for_each_center(self.side, sc.cell, |t, p| {
                z[t] *= sq0;
                let s = sqp * z[t];
                for &j in &p {
                    z[j] -= s;
                }
                count += 1;
            });
            let (tr, di) = (sc.triangle, sc.diamond);
            let (tr0, di0) = (1.0 / tr.innovation, 1.0 / di.innovation);
            for_each_edge(self.side, sc.cell, |e| {
                match e {
                    Edge::Triangle {
                        target: t,
                        ends,
                        interior,
                    } => {
                        z[t] *= tr0;
                        let s = tr.edge * z[t];
                        z[ends[0]] -= s;
                        z[ends[1]] -= s;
                        z[interior] -= tr.interior * z[t];
                    }
                    Edge::Diamond {
                        target: t,
                        parents: p,
                    } => {
                        z[t] *= di0;
                        let s = di.parent * z[t];
                        for &j in &p {
                            z[j] -= s;
                        }
                    }
                }
                count += 1;
            });
            flops += count * STENCIL_FLOPS;
        }
        flops
    }

    fn outer(&self) -> &OuterOperator {
        &self.coefficients.outer
    }

    fn outer_forward(&self, v: &mut [f64]) -> u64 {
        let [i1, i2, i3, i4] = self.corners();
        let o = self.outer();
        let s = 0.5 * o.a * v[i1];
        let t = 0.5 * o.b * v[i2];
        let tip = 0.5 * o.c * v[i3];
        let tilt = 0.5 * o.c * v[i4];
        let (d, e) = (s - t, s + t);
        v[i1] = d - tip;
        v[i2] = e - tilt;
        v[i3] = d + tip;
        v[i4] = e + tilt;
        OUTER_FLOPS
    }

    fn outer_inverse(&self, v: &mut [f64]) -> u64 {
        let [i1, i2, i3, i4] = self.corners();
        let o = self.outer();
        let (w1, w2, w3, w4) = (v[i1], v[i2], v[i3], v[i4]);
        let (p, q) = (w1 + w3, w2 + w4);
        v[i1] = (p + q) * (0.5 / o.a);
        v[i2] = (q - p) * (0.5 / o.b);
        v[i3] = (w3 - w1) / o.c;
        v[i4] = (w4 - w2) / o.c;
        OUTER_FLOPS
    }

    fn outer_transpose(&self, z: &mut [f64]) -> u64 {
        let [i1, i2, i3, i4] = self.corners();
        let o = self.outer();
        let (z1, z2, z3, z4) = (z[i1], z[i2], z[i3], z[i4]);
        let (p, q) = (z1 + z3, z2 + z4);
        z[i1] = 0.5 * o.a * (p + q);
        z[i2] = 0.5 * o.b * (q - p);
        z[i3] = 0.5 * o.c * (z3 - z1);
        z[i4] = 0.5 * o.c * (z4 - z2);
        OUTER_FLOPS
    }

    fn outer_inverse_transpose(&self, z: &mut [f64]) -> u64 {
        let [i1, i2, i3, i4] = self.corners();
        let o = self.outer();
        let s = (0.5 / o.a) * z[i1];
        let t = (0.5 / o.b) * z[i2];
        let tip = z[i3] / o.c;
        let tilt = z[i4] / o.c;
        let (d, e) = (s - t, s + t);
        z[i1] = d - tip;
        z[i2] = e - tilt;
        z[i3] = d + tip;
        z[i4] = e + tilt;
        OUTER_FLOPS
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Dense matrix of a transform, one column per basis vector.
    fn assemble(op: &FractalOperator, t: Transform) -> Vec<Vec<f64>> {
        let n = op.len();
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            op.apply(t, &mut e).unwrap();
            cols.push(e);
        }
        cols
    }

    #[test]
    fn every_point_is_visited_once_per_scale() {
        for side in [3, 5, 9, 17, 33] {
            let op = FractalOperator::kolmogorov(1.0, side).unwrap();
            let mut hits = vec![0u32; side * side];
            for sc in &op.coefficients().scales {
                for_each_center(side, sc.cell, |t, _| hits[t] += 1);
                for_each_edge(side, sc.cell, |e| match e {
                    Edge::Triangle { target, .. } | Edge::Diamond { target, .. } => {
                        hits[target] += 1
                    }
                });
            }
            for c in op.corners() {
                hits[c] += 1;
            }
            assert!(hits.iter().all(|&h| h == 1), "side {side}");
        }
    }

    #[test]
    fn piston_generator_fills_corners() {
        let op = FractalOperator::kolmogorov(1.0, 3).unwrap();
        let a = op.coefficients().outer.a;
        let mut v = vec![0.0; 9];
        v[0] = 1.0;
        op.outer_forward(&mut v);
        for c in op.corners() {
            assert!((v[c] - 0.5 * a).abs() < 1e-15);
        }
    }

    #[test]
    fn factored_outer_transforms_match_matrices() {
        let op = FractalOperator::kolmogorov(1.0, 9).unwrap();
        let o = op.coefficients().outer;
        let corners = op.corners();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = random_vec(4, &mut rng);
        let mat_apply = |m: &[[f64; 4]; 4], transpose: bool| -> Vec<f64> {
            (0..4)
                .map(|i| {
                    (0..4)
                        .map(|k| if transpose { m[k][i] } else { m[i][k] } * x[k])
                        .sum()
                })
                .collect()
        };
        let cases: [(fn(&FractalOperator, &mut [f64]) -> u64, Vec<f64>); 4] = [
            (FractalOperator::outer_forward, mat_apply(&o.forward, false)),
            (FractalOperator::outer_inverse, mat_apply(&o.inverse, false)),
            (
                FractalOperator::outer_transpose,
                mat_apply(&o.forward, true),
            ),
            (
                FractalOperator::outer_inverse_transpose,
                mat_apply(&o.inverse, true),
            ),
        ];
        for (f, expected) in cases {
            let mut v = vec![0.0; 81];
            for (k, &c) in corners.iter().enumerate() {
                v[c] = x[k];
            }
            assert_eq!(f(&op, &mut v), OUTER_FLOPS);
            for (k, &c) in corners.iter().enumerate() {
                assert!(
                    (v[c] - expected[k]).abs() < 1e-12,
                    "{} vs {}",
                    v[c],
                    expected[k]
                );
            }
        }
    }

    #[test]
    fn constant_wavefront_generators() {
        let op = FractalOperator::kolmogorov(1.0, 3).unwrap();
        let mut v = vec![1.0; 9];
        op.apply(Transform::Inverse, &mut v).unwrap();
        let a = op.coefficients().outer.a;
        let [c1, c2, c3, c4] = op.corners();
        assert!((v[c1] - 2.0 / a).abs() < 1e-14);
        for c in [c2, c3, c4] {
            assert!(v[c].abs() < 1e-14);
        }
        // refinement generators carry the part of the constant the parents do not explain
        let sc = op.coefficients().scales[0];
        let center = (1.0 - 4.0 * sc.square.parent) / sc.square.innovation;
        let edge = (1.0 - 2.0 * sc.triangle.edge - sc.triangle.interior) / sc.triangle.innovation;
        assert!((v[4] - center).abs() < 1e-14);
        for t in [1, 3, 5, 7] {
            assert!((v[t] - edge).abs() < 1e-14);
        }
    }

    #[test]
    fn round_trips_and_adjoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for side in [3, 5, 9, 17] {
            let op = FractalOperator::kolmogorov(1.0, side).unwrap();
            for _ in 0..20 {
                let u = random_vec(op.len(), &mut rng);
                let mut w = u.clone();
                op.apply(Transform::Forward, &mut w).unwrap();
                op.apply(Transform::Inverse, &mut w).unwrap();
                let err: Vec<f64> = w.iter().zip(&u).map(|(a, b)| a - b).collect();
                assert!(max_abs(&err) <= 1e-9 * max_abs(&u));

                let mut z = u.clone();
                op.apply(Transform::Transpose, &mut z).unwrap();
                op.apply(Transform::InverseTranspose, &mut z).unwrap();
                let err: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a - b).collect();
                assert!(max_abs(&err) <= 1e-9 * max_abs(&u));

                let y = random_vec(op.len(), &mut rng);
                for (fwd, adj) in [
                    (Transform::Forward, Transform::Transpose),
                    (Transform::Inverse, Transform::InverseTranspose),
                ] {
                    let mut ax = u.clone();
                    op.apply(fwd, &mut ax).unwrap();
                    let mut aty = y.clone();
                    op.apply(adj, &mut aty).unwrap();
                    let (l, r) = (dot(&ax, &y), dot(&u, &aty));
                    assert!((l - r).abs() <= 1e-12 * l.abs().max(r.abs()), "{l} vs {r}");
                }
            }
        }
    }

    #[test]
    fn transpose_matrix_matches_forward_matrix() {
        let op = FractalOperator::kolmogorov(1.0, 5).unwrap();
        let k = assemble(&op, Transform::Forward);
        let kt = assemble(&op, Transform::Transpose);
        for i in 0..op.len() {
            for j in 0..op.len() {
                // column j of Kᵀ, entry i  ==  K[j][i] == column i of K, entry j
                assert!((kt[j][i] - k[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let op = FractalOperator::kolmogorov(1.0, 9).unwrap();
        for t in [
            Transform::Forward,
            Transform::Inverse,
            Transform::Transpose,
            Transform::InverseTranspose,
        ] {
            let mut v = vec![0.0; 81];
            op.apply(t, &mut v).unwrap();
            assert!(v.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn shape_errors() {
        let op = FractalOperator::kolmogorov(1.0, 9).unwrap();
        assert!(op.apply(Transform::Forward, &mut vec![0.0; 80]).is_err());
        assert!(FractalOperator::kolmogorov(1.0, 10).is_err());
    }

    #[test]
    fn flop_counts_are_identical_and_exact() {
        for side in [3, 5, 9, 33, 65] {
            let op = FractalOperator::kolmogorov(1.0, side).unwrap();
            let n = (side * side) as u64;
            for t in [
                Transform::Forward,
                Transform::Inverse,
                Transform::Transpose,
                Transform::InverseTranspose,
            ] {
                let mut v = vec![0.5; side * side];
                assert_eq!(op.apply(t, &mut v).unwrap(), 6 * n - 14);
            }
        }
    }

    /// `(new sample, parent)` pairs created at each refinement, coarsest first.
    fn parent_pairs(op: &FractalOperator) -> Vec<Vec<(usize, usize)>> {
        let side = op.side();
        op.coefficients()
            .scales
            .iter()
            .map(|sc| {
                let mut pairs = Vec::new();
                for_each_center(side, sc.cell, |t, p| {
                    pairs.extend(p.iter().map(|&j| (t, j)))
                });
                for_each_edge(side, sc.cell, |e| match e {
                    Edge::Triangle {
                        target,
                        ends,
                        interior,
                    } => pairs.extend([(target, ends[0]), (target, ends[1]), (target, interior)]),
                    Edge::Diamond { target, parents } => {
                        pairs.extend(parents.iter().map(|&j| (target, j)))
                    }
                });
                pairs
            })
            .collect()
    }

    /// Largest deviations of variance and pair structure function from the
    /// prescribed statistics, per refinement level, from a dense `K·Kᵀ`.
    fn prior_deviations(side: usize) -> (f64, Vec<(f64, f64)>) {
        let op = FractalOperator::kolmogorov(1.0, side).unwrap();
        let n = op.len();
        let k = assemble(&op, Transform::Forward); // k[col][row]
        let cov = |i: usize, j: usize| -> f64 { (0..n).map(|c| k[c][i] * k[c][j]).sum() };
        let sf = *op.structure();
        let var = sf.variance();
        let pos = |i: usize| ((i % side) as f64, (i / side) as f64);
        let dist = |i: usize, j: usize| {
            let (a, b) = (pos(i), pos(j));
            (a.0 - b.0).hypot(a.1 - b.1)
        };
        let corners = op.corners();
        let mut corner_dev: f64 = 0.0;
        for &i in &corners {
            for &j in &corners {
                let d2 = cov(i, i) + cov(j, j) - 2.0 * cov(i, j);
                corner_dev = corner_dev
                    .max((cov(i, i) - var).abs())
                    .max((d2 - sf.evaluate(dist(i, j)).unwrap()).abs());
            }
        }
        let levels = parent_pairs(&op)
            .into_iter()
            .map(|pairs| {
                let mut dv: f64 = 0.0;
                let mut df: f64 = 0.0;
                for (t, j) in pairs {
                    dv = dv.max((cov(t, t) - var).abs() / var);
                    let d2 = cov(t, t) + cov(j, j) - 2.0 * cov(t, j);
                    df = df.max((d2 - sf.evaluate(dist(t, j)).unwrap()).abs() / var);
                }
                (dv, df)
            })
            .collect();
        (corner_dev / var, levels)
    }

    #[test]
    fn prior_is_exact_where_parents_are_exact() {
        // The corners and the first refinement only see parent covariances
        // set exactly by the outer operator, so K·Kᵀ carries σ² and f(r)
        // on every (new sample, parent) pair there.
        for side in [3, 5, 9] {
            let (corners, levels) = prior_deviations(side);
            assert!(corners <= 1e-12, "corners at side {side}: {corners:e}");
            let (dv, df) = levels[0];
            assert!(
                dv <= 1e-10 && df <= 1e-10,
                "first level at side {side}: {dv:e} {df:e}"
            );
        }
    }

    #[test]
    fn prior_is_close_on_finer_levels() {
        // Finer levels condition on parents whose mutual covariances are
        // themselves fractal approximations, so the match is approximate.
        let (_, levels) = prior_deviations(9);
        for (dv, df) in levels {
            assert!(dv < 0.01 && df < 0.01, "{dv:e} {df:e}");
        }
    }
}
