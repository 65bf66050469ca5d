//! Shack-Hartmann sensor in the Fried geometry.
//!
//! Phase samples sit on subaperture corners. Each valid subaperture with
//! lower-left corner `(x, y)` yields
//!
//! ```text
//! dx = ½ [w(x+1,y+1) + w(x+1,y) − w(x,y+1) − w(x,y)]
//! dy = ½ [w(x+1,y+1) − w(x+1,y) + w(x,y+1) − w(x,y)]
//! ```
//!
//! Slopes are stored interleaved, `[dx₀, dy₀, dx₁, dy₁, …]`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, Error, Result};
use crate::fractal::{scales_for_side, PhaseGrid};

/// Ratio of the central obscuration diameter to the pupil diameter.
pub const OBSCURATION_RATIO: f64 = 1.0 / 3.0;

/// Variance recorded for noiseless measurements, so that the data weights
/// `1/Var(n)` stay finite.
pub const MIN_NOISE_VARIANCE: f64 = 1e-4;

/// Flops of one forward slope pair: 2 differences, 2 sums, 2 halvings.
const SLOPE_PAIR_FLOPS: u64 = 6;
/// Flops of one adjoint scatter: 2 sums, 2 halvings, 4 accumulations.
const SCATTER_FLOPS: u64 = 8;

/// Annular pupil over a `side × side` lattice and its valid subapertures.
#[derive(Debug, Clone, PartialEq)]
pub struct Pupil {
    side: usize,
    sample_mask: Vec<bool>,
    subaperture_mask: Vec<bool>,
    /// Flat index of the lower-left corner of each valid subaperture.
    subapertures: Vec<usize>,
}

impl Pupil {
    /// Pupil spanning the grid (diameter `side − 1` steps) with the standard
    /// 1/3 central obscuration.
    pub fn annular(side: usize) -> Result<Self> {
        Self::with_obscuration(side, OBSCURATION_RATIO)
    }

    /// Annular pupil with a custom obscuration ratio in `[0, 1)`.
    ///
    /// A subaperture is valid iff its 4 corners lie inside the annulus; the
    /// sample mask is the union of corners of valid subapertures.
    pub fn with_obscuration(side: usize, ratio: f64) -> Result<Self> {
        scales_for_side(side)?;
        if !(0.0..1.0).contains(&ratio) {
            return Err(Error::Domain(format!(
                "obscuration ratio must be in [0, 1), got {ratio}"
            )));
        }
        let center = 0.5 * (side - 1) as f64;
        let outer = center;
        let inner = ratio * outer;
        let eps = 1e-9 * outer.max(1.0);
        let inside = |ix: usize, iy: usize| {
            let r = (ix as f64 - center).hypot(iy as f64 - center);
            r <= outer + eps && r >= inner - eps
        };
        Ok(Self::from_predicate(side, |ix, iy| {
            inside(ix, iy) && inside(ix + 1, iy) && inside(ix, iy + 1) && inside(ix + 1, iy + 1)
        }))
    }

    /// Every cell of the grid is a valid subaperture.
    pub fn square(side: usize) -> Result<Self> {
        scales_for_side(side)?;
        Ok(Self::from_predicate(side, |_, _| true))
    }

    fn from_predicate(side: usize, valid: impl Fn(usize, usize) -> bool) -> Self {
        let cells = side - 1;
        let mut sample_mask = vec![false; side * side];
        let mut subaperture_mask = vec![false; cells * cells];
        let mut subapertures = Vec::new();
        for iy in 0..cells {
            for ix in 0..cells {
                if valid(ix, iy) {
                    let base = iy * side + ix;
                    subaperture_mask[iy * cells + ix] = true;
                    subapertures.push(base);
                    for k in [base, base + 1, base + side, base + side + 1] {
                        sample_mask[k] = true;
                    }
                }
            }
        }
        Self {
            side,
            sample_mask,
            subaperture_mask,
            subapertures,
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn sample_mask(&self) -> &[bool] {
        &self.sample_mask
    }

    /// Per-cell validity, row-major over the `(side−1)²` cells.
    pub fn subaperture_mask(&self) -> &[bool] {
        &self.subaperture_mask
    }

    pub fn num_subapertures(&self) -> usize {
        self.subapertures.len()
    }

    /// Number of measurements, two per subaperture.
    pub fn num_measurements(&self) -> usize {
        2 * self.subapertures.len()
    }

    pub fn num_samples(&self) -> usize {
        self.sample_mask.iter().filter(|&&m| m).count()
    }

    /// Lower-left corner `(ix, iy)` of each valid subaperture, in slope order.
    pub fn subaperture_positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.subapertures
            .iter()
            .map(move |&b| (b % self.side, b / self.side))
    }

    /// `slopes = S·w`. Returns the flops spent.
    pub fn apply_s(&self, w: &[f64], slopes: &mut [f64]) -> Result<u64> {
        check_len(self.side * self.side, w.len())?;
        check_len(self.num_measurements(), slopes.len())?;
        let n = self.side;
        for (k, &b) in self.subapertures.iter().enumerate() {
            let diag = w[b + n + 1] - w[b];
            let anti = w[b + 1] - w[b + n];
            slopes[2 * k] = 0.5 * (diag + anti);
            slopes[2 * k + 1] = 0.5 * (diag - anti);
        }
        Ok(SLOPE_PAIR_FLOPS * self.subapertures.len() as u64)
    }

    /// `w = Sᵀ·slopes`; samples outside the mask receive 0. Returns the flops spent.
    pub fn apply_s_transpose(&self, slopes: &[f64], w: &mut [f64]) -> Result<u64> {
        check_len(self.num_measurements(), slopes.len())?;
        check_len(self.side * self.side, w.len())?;
        let n = self.side;
        w.fill(0.0);
        for (k, &b) in self.subapertures.iter().enumerate() {
            let (sx, sy) = (slopes[2 * k], slopes[2 * k + 1]);
            let diag = 0.5 * (sx + sy);
            let anti = 0.5 * (sx - sy);
            w[b + n + 1] += diag;
            w[b] -= diag;
            w[b + 1] += anti;
            w[b + n] -= anti;
        }
        Ok(SCATTER_FLOPS * self.subapertures.len() as u64)
    }

    /// Noisy measurements `d = S·w + n`, `n ~ N(0, noise_std²)` i.i.d.
    pub fn simulate_measurements<R: Rng + ?Sized>(
        &self,
        truth: &PhaseGrid,
        noise_std: f64,
        rng: &mut R,
    ) -> Result<SlopeSet> {
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::Domain(format!(
                "noise std must be nonnegative, got {noise_std}"
            )));
        }
        check_len(self.side, truth.side())?;
        let mut slopes = vec![0.0; self.num_measurements()];
        self.apply_s(truth.values(), &mut slopes)?;
        if noise_std > 0.0 {
            for s in &mut slopes {
                let g: f64 = rng.sample(StandardNormal);
                *s += noise_std * g;
            }
        }
        let var = (noise_std * noise_std).max(MIN_NOISE_VARIANCE);
        SlopeSet::new(self, slopes, vec![var; self.num_subapertures()])
    }
}

/// Slope measurements for the valid subapertures of a pupil.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeSet {
    positions: Vec<(usize, usize)>,
    slopes: Vec<f64>,
    /// Noise variance per subaperture, shared by its x and y slopes.
    variance: Vec<f64>,
}

impl SlopeSet {
    pub fn new(pupil: &Pupil, slopes: Vec<f64>, variance: Vec<f64>) -> Result<Self> {
        Self::from_parts(pupil.subaperture_positions().collect(), slopes, variance)
    }

    /// Builds a slope set from explicit subaperture positions.
    pub fn from_parts(
        positions: Vec<(usize, usize)>,
        slopes: Vec<f64>,
        variance: Vec<f64>,
    ) -> Result<Self> {
        check_len(2 * positions.len(), slopes.len())?;
        check_len(positions.len(), variance.len())?;
        if let Some(v) = variance.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!(
                "noise variances must be positive, got {v}"
            )));
        }
        if slopes.iter().any(|s| !s.is_finite()) {
            return Err(Error::Domain("non-finite slope".into()));
        }
        Ok(Self {
            positions,
            slopes,
            variance,
        })
    }

    /// All-zero slopes with unit variance.
    pub fn zeros(pupil: &Pupil) -> Self {
        let n = pupil.num_subapertures();
        Self {
            positions: pupil.subaperture_positions().collect(),
            slopes: vec![0.0; 2 * n],
            variance: vec![1.0; n],
        }
    }

    pub fn num_subapertures(&self) -> usize {
        self.positions.len()
    }

    pub fn num_measurements(&self) -> usize {
        self.slopes.len()
    }

    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn dx(&self, isub: usize) -> f64 {
        self.slopes[2 * isub]
    }

    pub fn dy(&self, isub: usize) -> f64 {
        self.slopes[2 * isub + 1]
    }

    pub fn variance(&self) -> &[f64] {
        &self.variance
    }

    /// Diagonal of `C_e⁻¹`, one entry per measurement.
    pub fn inverse_variances(&self) -> Vec<f64> {
        self.variance
            .iter()
            .flat_map(|&v| [1.0 / v, 1.0 / v])
            .collect()
    }

    /// Errors unless the slopes were taken on `pupil`.
    pub fn check_pupil(&self, pupil: &Pupil) -> Result<()> {
        check_len(pupil.num_subapertures(), self.num_subapertures())?;
        if pupil
            .subaperture_positions()
            .zip(&self.positions)
            .any(|(a, &b)| a != b)
        {
            return Err(Error::Config(
                "slope positions do not match the pupil".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn annulus_geometry() {
        // a 5×5 grid is too small to hold a full subaperture inside the annulus
        assert_eq!(Pupil::annular(5).unwrap().num_subapertures(), 0);
        let p = Pupil::annular(65).unwrap();
        let n_sub = p.num_subapertures();
        let area = std::f64::consts::PI * 32.0f64.powi(2) * (1.0 - 1.0 / 9.0);
        assert!(
            (n_sub as f64) < area && (n_sub as f64) > 0.85 * area,
            "{n_sub}"
        );
        // center cell is obscured, the corner cell is outside
        let cells = 64;
        assert!(!p.subaperture_mask()[32 * cells + 32]);
        assert!(!p.subaperture_mask()[0]);
        assert_eq!(p.num_measurements(), 2 * n_sub);
        // symmetric under x ↔ y
        for iy in 0..cells {
            for ix in 0..cells {
                assert_eq!(
                    p.subaperture_mask()[iy * cells + ix],
                    p.subaperture_mask()[ix * cells + iy]
                );
            }
        }
    }

    #[test]
    fn sample_mask_is_union_of_corners() {
        let p = Pupil::annular(17).unwrap();
        let mut mask = vec![false; 17 * 17];
        for (ix, iy) in p.subaperture_positions() {
            for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                mask[(iy + dy) * 17 + ix + dx] = true;
            }
        }
        assert_eq!(mask, p.sample_mask());
    }

    #[test]
    fn plane_waves() {
        let p = Pupil::annular(33).unwrap();
        let mut s = vec![0.0; p.num_measurements()];
        let konst = PhaseGrid::from_fn(33, |_, _| 2.5).unwrap();
        p.apply_s(konst.values(), &mut s).unwrap();
        assert!(s.iter().all(|&v| v == 0.0));

        let ramp_x = PhaseGrid::from_fn(33, |x, _| x as f64).unwrap();
        p.apply_s(ramp_x.values(), &mut s).unwrap();
        assert!(s.chunks(2).all(|d| d[0] == 1.0 && d[1] == 0.0));

        let ramp_y = PhaseGrid::from_fn(33, |_, y| y as f64).unwrap();
        p.apply_s(ramp_y.values(), &mut s).unwrap();
        assert!(s.chunks(2).all(|d| d[0] == 0.0 && d[1] == 1.0));
    }

    #[test]
    fn single_subaperture_adjoint_stencil() {
        let p = Pupil::square(3).unwrap();
        let mut s = vec![0.0; p.num_measurements()];
        s[0] = 1.0; // dx of the subaperture at (0, 0)
        let mut w = vec![0.0; 9];
        p.apply_s_transpose(&s, &mut w).unwrap();
        // corners (0,0), (1,0), (0,1), (1,1)
        assert_eq!([w[0], w[1], w[3], w[4]], [-0.5, 0.5, -0.5, 0.5]);
        assert!(w
            .iter()
            .enumerate()
            .all(|(i, &v)| [0, 1, 3, 4].contains(&i) || v == 0.0));

        s[0] = 0.0;
        s[1] = 1.0;
        p.apply_s_transpose(&s, &mut w).unwrap();
        assert_eq!([w[0], w[1], w[3], w[4]], [-0.5, -0.5, 0.5, 0.5]);
    }

    #[test]
    fn adjoint_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for side in [3, 9, 33] {
            for p in [Pupil::annular(side).unwrap(), Pupil::square(side).unwrap()] {
                for _ in 0..10 {
                    let w: Vec<f64> = (0..side * side)
                        .map(|_| rng.sample(StandardNormal))
                        .collect();
                    let d: Vec<f64> = (0..p.num_measurements())
                        .map(|_| rng.sample(StandardNormal))
                        .collect();
                    let mut sw = vec![0.0; p.num_measurements()];
                    let mut std = vec![0.0; side * side];
                    p.apply_s(&w, &mut sw).unwrap();
                    p.apply_s_transpose(&d, &mut std).unwrap();
                    let (l, r) = (dot(&sw, &d), dot(&w, &std));
                    assert!((l - r).abs() <= 1e-12 * l.abs().max(r.abs()).max(1e-300));
                }
            }
        }
    }

    #[test]
    fn adjoint_vanishes_off_mask() {
        let p = Pupil::annular(17).unwrap();
        let s = vec![1.0; p.num_measurements()];
        let mut w = vec![7.0; 17 * 17];
        p.apply_s_transpose(&s, &mut w).unwrap();
        for (v, &m) in w.iter().zip(p.sample_mask()) {
            if !m {
                assert_eq!(*v, 0.0);
            }
        }
        p.apply_s_transpose(&vec![0.0; p.num_measurements()], &mut w)
            .unwrap();
        assert!(w.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shape_errors() {
        let p = Pupil::annular(9).unwrap();
        let mut s = vec![0.0; p.num_measurements()];
        assert!(p.apply_s(&[0.0; 80], &mut s).is_err());
        assert!(p.apply_s_transpose(&[0.0; 3], &mut vec![0.0; 81]).is_err());
        assert!(Pupil::annular(8).is_err());
    }

    #[test]
    fn noiseless_measurements_are_exact() {
        let p = Pupil::annular(17).unwrap();
        let truth = PhaseGrid::from_fn(17, |x, y| (x * y) as f64 * 0.1).unwrap();
        let mut exact = vec![0.0; p.num_measurements()];
        p.apply_s(truth.values(), &mut exact).unwrap();
        let d = p
            .simulate_measurements(&truth, 0.0, &mut ChaCha8Rng::seed_from_u64(1))
            .unwrap();
        assert_eq!(d.slopes(), &exact[..]);
        assert!(d.variance().iter().all(|&v| v == MIN_NOISE_VARIANCE));
    }

    #[test]
    fn noise_statistics() {
        let p = Pupil::annular(65).unwrap();
        let truth = PhaseGrid::from_fn(65, |x, y| (x as f64).sin() + 0.1 * y as f64).unwrap();
        let mut exact = vec![0.0; p.num_measurements()];
        p.apply_s(truth.values(), &mut exact).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut resid = Vec::new();
        while resid.len() < 10_000 {
            let d = p.simulate_measurements(&truth, 1.0, &mut rng).unwrap();
            resid.extend(d.slopes().iter().zip(&exact).map(|(a, b)| a - b));
        }
        let n = resid.len() as f64;
        let mean = resid.iter().sum::<f64>() / n;
        let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((0.95..=1.05).contains(&var), "{var}");
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let p = Pupil::annular(33).unwrap();
        let truth = PhaseGrid::zeros(33).unwrap();
        let a = p
            .simulate_measurements(&truth, 0.5, &mut ChaCha8Rng::seed_from_u64(4))
            .unwrap();
        let b = p
            .simulate_measurements(&truth, 0.5, &mut ChaCha8Rng::seed_from_u64(4))
            .unwrap();
        assert_eq!(a, b);
        assert!(p
            .simulate_measurements(&truth, -1.0, &mut ChaCha8Rng::seed_from_u64(4))
            .is_err());
    }

    #[test]
    fn flop_counts() {
        let p = Pupil::annular(65).unwrap();
        let mut s = vec![0.0; p.num_measurements()];
        let mut w = vec![0.0; 65 * 65];
        let n_sub = p.num_subapertures() as u64;
        assert_eq!(p.apply_s(&w.clone(), &mut s).unwrap(), 6 * n_sub);
        assert_eq!(p.apply_s_transpose(&s, &mut w).unwrap(), 8 * n_sub);
    }
}
