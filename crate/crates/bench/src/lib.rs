//! Fixtures shared by the benchmarks.

use wavefront_core::seeding::{trial_rng, Stream};
use wavefront_core::{
    FractalOperator, PhaseGrid, Pupil, Reconstructor, SlopeSet, SolverConfig, SolverVariant,
};

/// One noisy trial on a `(2^p + 1)²` grid.
pub struct Fixture {
    pub pupil: Pupil,
    pub fractal: FractalOperator,
    pub truth: PhaseGrid,
    pub slopes: SlopeSet,
}

impl Fixture {
    pub fn new(p: u32, noise_std: f64) -> Self {
        let side = (1usize << p) + 1;
        let pupil = Pupil::annular(side).expect("valid side");
        let fractal = FractalOperator::kolmogorov(1.0, side).expect("valid side");
        let truth = fractal.generate_screen(&mut trial_rng(1, 0, Stream::Screen));
        let slopes = pupil
            .simulate_measurements(&truth, noise_std, &mut trial_rng(1, 0, Stream::Noise))
            .expect("matching pupil");
        Self {
            pupil,
            fractal,
            truth,
            slopes,
        }
    }

    pub fn unknowns(&self) -> usize {
        self.fractal.len()
    }

    /// Reconstructor running exactly `iterations` iterations of `variant`.
    pub fn reconstructor(&self, variant: SolverVariant, iterations: usize) -> Reconstructor {
        let config = SolverConfig::new(variant)
            .with_max_iterations(iterations)
            .with_tolerance(f64::MIN_POSITIVE);
        Reconstructor::new(
            self.pupil.clone(),
            self.fractal.clone(),
            self.slopes.inverse_variances(),
            config,
        )
        .expect("consistent fixture")
    }
}
