use std::path::Path;

use crate::error::{check_len, Error, Result};
use crate::fractal::{FractalOperator, PhaseGrid, Transform};
use crate::metrics::{residual_stats, FlopCategory, FlopCounter, ResidualStats};
use crate::sensor::{Pupil, SlopeSet};
use crate::turbulence::StructureKind;

use super::config::{Preconditioner, SolverConfig, Space};
use super::pcg::{pcg_solve, ConvergenceTrace, Monitor};
use super::precond::{build_preconditioner, load_or_build, CacheKey, DiagonalPreconditioner};
use super::system::NormalEquations;

/// Residual of the iterates against a known wavefront.
struct TruthMonitor<'a> {
    space: Space,
    fractal: &'a FractalOperator,
    pupil: &'a Pupil,
    truth: &'a PhaseGrid,
    reference: f64,
    scratch: Vec<f64>,
}

impl Monitor for TruthMonitor<'_> {
    fn residual_variance(&mut self, x: &[f64]) -> Result<f64> {
        self.scratch.copy_from_slice(x);
        if self.space == Space::U {
            self.fractal.apply(Transform::Forward, &mut self.scratch)?;
        }
        Ok(residual_stats(&self.scratch, self.truth.values(), self.pupil)?.variance)
    }

    fn reference_variance(&self) -> f64 {
        self.reference
    }
}

/// Result of one reconstruction.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub wavefront: PhaseGrid,
    /// Unknowns in the solver's space (`w` or `u`).
    pub solution: Vec<f64>,
    pub trace: ConvergenceTrace,
    /// Work from the right-hand side to the returned wavefront.
    pub flops: FlopCounter,
    /// Piston-removed residual against the truth, when one was given.
    pub residual: Option<ResidualStats>,
}

/// Wavefront reconstructor for a fixed geometry, prior and noise model.
#[derive(Debug, Clone)]
pub struct Reconstructor {
    pupil: Pupil,
    fractal: FractalOperator,
    weights: Vec<f64>,
    config: SolverConfig,
    preconditioner: Option<DiagonalPreconditioner>,
}

impl Reconstructor {
    /// Builds the reconstructor and, if the configured variant asks for one,
    /// its preconditioner. `weights` is the diagonal of `C_e⁻¹`.
    pub fn new(
        pupil: Pupil,
        fractal: FractalOperator,
        weights: Vec<f64>,
        config: SolverConfig,
    ) -> Result<Self> {
        Self::build(pupil, fractal, weights, config, None)
    }

    /// Like [`Reconstructor::new`], reusing a preconditioner stored in
    /// `cache_dir` when one matches.
    pub fn with_cache(
        pupil: Pupil,
        fractal: FractalOperator,
        weights: Vec<f64>,
        config: SolverConfig,
        cache_dir: &Path,
    ) -> Result<Self> {
        Self::build(pupil, fractal, weights, config, Some(cache_dir))
    }

    /// Uses an already computed preconditioner.
    pub fn with_preconditioner(
        pupil: Pupil,
        fractal: FractalOperator,
        weights: Vec<f64>,
        config: SolverConfig,
        preconditioner: Option<DiagonalPreconditioner>,
    ) -> Result<Self> {
        config.validate()?;
        NormalEquations::new(config.variant.space, &pupil, &fractal, &weights)?;
        let wanted = config.variant.preconditioner;
        match &preconditioner {
            None if wanted == Preconditioner::None => {}
            Some(p) if p.kind() == wanted && p.space() == config.variant.space => {
                check_len(fractal.len(), p.values().len())?;
            }
            _ => {
                return Err(Error::Config(format!(
                    "preconditioner does not match variant {}",
                    config.variant
                )))
            }
        }
        Ok(Self {
            pupil,
            fractal,
            weights,
            config,
            preconditioner,
        })
    }

    fn build(
        pupil: Pupil,
        fractal: FractalOperator,
        weights: Vec<f64>,
        config: SolverConfig,
        cache_dir: Option<&Path>,
    ) -> Result<Self> {
        config.validate()?;
        let variant = config.variant;
        let system = NormalEquations::new(variant.space, &pupil, &fractal, &weights)?;
        let preconditioner = match (variant.preconditioner, cache_dir) {
            (Preconditioner::None, _) | (_, None) => {
                build_preconditioner(&system, variant.preconditioner, variant.space)?
            }
            (kind, Some(dir)) => {
                let file = cache_key(&pupil, &fractal, &weights).file_name(variant.name());
                Some(load_or_build(dir, &file, || {
                    build_preconditioner(&system, kind, variant.space)
                        .map(|p| p.expect("kind is not None"))
                })?)
            }
        };
        Ok(Self {
            pupil,
            fractal,
            weights,
            config,
            preconditioner,
        })
    }

    pub fn pupil(&self) -> &Pupil {
        &self.pupil
    }

    pub fn fractal(&self) -> &FractalOperator {
        &self.fractal
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn preconditioner(&self) -> Option<&DiagonalPreconditioner> {
        self.preconditioner.as_ref()
    }

    pub fn normal_equations(&self) -> NormalEquations<'_> {
        NormalEquations::new(
            self.config.variant.space,
            &self.pupil,
            &self.fractal,
            &self.weights,
        )
        .expect("validated at construction")
    }

    /// Solves for the wavefront. With a `truth`, every trace row carries the
    /// residual variance of the current iterate.
    pub fn reconstruct(
        &self,
        slopes: &SlopeSet,
        truth: Option<&PhaseGrid>,
    ) -> Result<Reconstruction> {
        slopes.check_pupil(&self.pupil)?;
        let system = self.normal_equations();
        let space = self.config.variant.space;
        let mut flops = FlopCounter::new();
        let b = system.rhs(slopes.slopes(), &mut flops)?;

        let mut monitor = match truth {
            Some(t) => {
                check_len(self.pupil.side(), t.side())?;
                let zeros = vec![0.0; t.len()];
                Some(TruthMonitor {
                    space,
                    fractal: &self.fractal,
                    pupil: &self.pupil,
                    truth: t,
                    reference: residual_stats(&zeros, t.values(), &self.pupil)?.variance,
                    scratch: zeros,
                })
            }
            None => None,
        };
        let (solution, trace) = pcg_solve(
            &system,
            &b,
            &self.config,
            self.preconditioner.as_ref(),
            monitor.as_mut().map(|m| m as &mut dyn Monitor),
            &mut flops,
        )?;
        let w = system.to_wavefront(&solution, &mut flops)?;
        let residual = match truth {
            Some(t) => Some(residual_stats(&w, t.values(), &self.pupil)?),
            None => None,
        };
        Ok(Reconstruction {
            wavefront: PhaseGrid::from_values(self.pupil.side(), w)?,
            solution,
            trace,
            flops,
            residual,
        })
    }
}

fn cache_key(pupil: &Pupil, fractal: &FractalOperator, weights: &[f64]) -> CacheKey {
    let s = fractal.structure();
    let kind: &[u8] = match s.kind() {
        StructureKind::Kolmogorov => b"kolmogorov",
        StructureKind::Null => b"null",
    };
    let mask: Vec<u8> = pupil.subaperture_mask().iter().map(|&m| m as u8).collect();
    CacheKey::default()
        .bytes(kind)
        .bytes(&(fractal.side() as u64).to_le_bytes())
        .f64s(&[s.r0(), s.variance()])
        .bytes(&mask)
        .f64s(weights)
}

/// Flops a matrix-free `A·x` spends, measured on a zero vector.
pub fn measure_operator_flops(system: &NormalEquations<'_>) -> Result<u64> {
    use super::system::LinearOperator;
    let n = system.dim();
    let mut flops = FlopCounter::new();
    let x = vec![0.0; n];
    let mut y = vec![0.0; n];
    system.apply(&x, &mut y, &mut flops)?;
    Ok(flops.total())
}

/// Fraction of the flops spent applying the fractal operator.
pub fn fractal_share(flops: &FlopCounter) -> f64 {
    let total = flops.total();
    if total == 0 {
        0.0
    } else {
        flops.get(FlopCategory::Fractal) as f64 / total as f64
    }
}
