//! Monte-Carlo experiments, structure-function validation and benchmarks.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Result};
use rayon::prelude::*;
use wavefront_core::fractal::side_for_scales;
use wavefront_core::metrics::{empirical_structure_function, FlopModel, StructureEstimate};
use wavefront_core::seeding::{trial_rng, Stream};
use wavefront_core::solver::{CacheKey, LinearOperator, TraceRow};
use wavefront_core::{
    DiagonalPreconditioner, FlopCounter, FractalOperator, PhaseGrid, Preconditioner, Pupil,
    Reconstructor, SlopeSet, SolverConfig, SolverVariant, Transform,
};

use crate::error::ValidationError;

/// Parameters shared by the experiment commands.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// Grid side is `2^p + 1`.
    pub p: u32,
    /// Fried parameter in grid steps.
    pub r0: f64,
    /// Slope noise standard deviation, rad per subaperture.
    pub noise_std: f64,
    pub variants: Vec<SolverVariant>,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            p: 6,
            r0: 1.0,
            noise_std: 1.0,
            variants: vec![SolverVariant::default()],
            max_iterations: 30,
            tolerance: 1e-3,
            trials: 100,
            seed: 1,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(ValidationError::new(msg).into());
        if !(1..=12).contains(&self.p) {
            return fail(format!("--p must be in 1..=12, got {}", self.p));
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return fail(format!("--r0 must be positive, got {}", self.r0));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return fail(format!(
                "--noise-std must be nonnegative, got {}",
                self.noise_std
            ));
        }
        if self.variants.is_empty() {
            return fail("at least one --method is required".into());
        }
        if self.max_iterations == 0 {
            return fail("--max-iter must be at least 1".into());
        }
        if !(self.tolerance > 0.0) {
            return fail(format!("--tol must be positive, got {}", self.tolerance));
        }
        if self.trials == 0 {
            return fail("--trials must be at least 1".into());
        }
        Ok(())
    }

    pub fn side(&self) -> usize {
        side_for_scales(self.p).expect("validated")
    }

    pub fn solver_config(&self, variant: SolverVariant) -> SolverConfig {
        SolverConfig::new(variant)
            .with_max_iterations(self.max_iterations)
            .with_tolerance(self.tolerance)
    }

    /// One-line description for output file headers.
    pub fn describe(&self, command: &str) -> String {
        let methods: Vec<_> = self.variants.iter().map(|v| v.name()).collect();
        format!(
            "wavefront {command} p={} side={} r0={} noise_std={} methods={} max_iter={} tol={} trials={} seed={}",
            self.p,
            self.side(),
            self.r0,
            self.noise_std,
            methods.join(","),
            self.max_iterations,
            self.tolerance,
            self.trials,
            self.seed
        )
    }
}

/// Screen and noisy slopes of one trial, drawn from the trial's own streams.
pub fn draw_trial(
    fractal: &FractalOperator,
    pupil: &Pupil,
    noise_std: f64,
    seed: u64,
    trial: u64,
) -> Result<(PhaseGrid, SlopeSet)> {
    let truth = fractal.generate_screen(&mut trial_rng(seed, trial, Stream::Screen));
    let slopes = pupil.simulate_measurements(
        &truth,
        noise_std,
        &mut trial_rng(seed, trial, Stream::Noise),
    )?;
    Ok((truth, slopes))
}

/// Stable hash of a slope vector.
pub fn slope_hash(slopes: &SlopeSet) -> u64 {
    CacheKey::default()
        .f64s(slopes.slopes())
        .f64s(slopes.variance())
        .finish()
}

/// Per-iteration medians over trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianRow {
    pub iter: usize,
    pub flops: f64,
    pub rnorm: f64,
    pub resid_var: f64,
    pub resid_var_norm: f64,
    pub strehl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantCurve {
    pub variant: SolverVariant,
    pub rows: Vec<MedianRow>,
    /// Hash of the slopes each trial consumed, by trial index.
    pub input_hashes: Vec<u64>,
    pub precompute_seconds: f64,
}

impl VariantCurve {
    /// Median normalized residual variance after `iter` iterations.
    pub fn normalized(&self, iter: usize) -> f64 {
        self.rows[iter.min(self.rows.len() - 1)].resid_var_norm
    }

    /// Median residual variance after `iter` iterations.
    pub fn variance(&self, iter: usize) -> f64 {
        self.rows[iter.min(self.rows.len() - 1)].resid_var
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub spec: ExperimentSpec,
    pub curves: Vec<VariantCurve>,
}

impl Simulation {
    pub fn curve(&self, variant: SolverVariant) -> Option<&VariantCurve> {
        self.curves.iter().find(|c| c.variant == variant)
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn median_rows(traces: &[Vec<TraceRow>], iterations: usize) -> Vec<MedianRow> {
    // a trial that stopped early keeps its last iterate
    let at = |t: &Vec<TraceRow>, k: usize| t[k.min(t.len() - 1)];
    (0..=iterations)
        .map(|k| {
            let col = |f: &dyn Fn(&TraceRow) -> f64| -> f64 {
                let mut v: Vec<f64> = traces.iter().map(|t| f(&at(t, k))).collect();
                median(&mut v)
            };
            MedianRow {
                iter: k,
                flops: col(&|r| r.flops as f64),
                rnorm: col(&|r| r.rnorm),
                resid_var: col(&|r| r.resid_var.unwrap_or(f64::NAN)),
                resid_var_norm: col(&|r| r.resid_var_norm.unwrap_or(f64::NAN)),
                strehl: col(&|r| r.strehl.unwrap_or(f64::NAN)),
            }
        })
        .collect()
}

/// Runs every trial through every requested variant. All variants see the
/// same screens and noise; each variant's preconditioner is built once.
pub fn simulate(spec: &ExperimentSpec, cache_dir: Option<&Path>) -> Result<Simulation> {
    spec.validate()?;
    let side = spec.side();
    let pupil = Pupil::annular(side)?;
    if pupil.num_subapertures() == 0 {
        bail!(ValidationError::new(format!(
            "pupil of side {side} has no valid subapertures"
        )));
    }
    let fractal = FractalOperator::kolmogorov(spec.r0, side)?;
    let inputs: Vec<(PhaseGrid, SlopeSet)> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|t| draw_trial(&fractal, &pupil, spec.noise_std, spec.seed, t))
        .collect::<Result<_>>()?;
    let weights = inputs[0].1.inverse_variances();

    let mut curves = Vec::with_capacity(spec.variants.len());
    for &variant in &spec.variants {
        let start = Instant::now();
        let config = spec.solver_config(variant);
        let rec = match cache_dir {
            Some(dir) => Reconstructor::with_cache(
                pupil.clone(),
                fractal.clone(),
                weights.clone(),
                config,
                dir,
            )?,
            None => Reconstructor::new(pupil.clone(), fractal.clone(), weights.clone(), config)?,
        };
        let precompute_seconds = start.elapsed().as_secs_f64();
        let results: Vec<(Vec<TraceRow>, u64)> = inputs
            .par_iter()
            .map(|(truth, slopes)| {
                let out = rec.reconstruct(slopes, Some(truth))?;
                Ok((out.trace.rows, slope_hash(slopes)))
            })
            .collect::<Result<_>>()?;
        let (traces, input_hashes): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        curves.push(VariantCurve {
            variant,
            rows: median_rows(&traces, spec.max_iterations),
            input_hashes,
            precompute_seconds,
        });
    }
    Ok(Simulation {
        spec: spec.clone(),
        curves,
    })
}

/// Largest iteration of `curve` whose median cumulative flops fit in `budget`.
pub fn iteration_within_budget(curve: &VariantCurve, budget: f64) -> Option<usize> {
    curve
        .rows
        .iter()
        .filter(|r| r.flops <= budget)
        .map(|r| r.iter)
        .max()
}

const SCREENS_PER_CHUNK: usize = 64;

/// Structure function averaged over `trials` independent screens.
pub fn validate_structure(spec: &ExperimentSpec) -> Result<StructureEstimate> {
    spec.validate()?;
    let fractal = FractalOperator::kolmogorov(spec.r0, spec.side())?;
    let chunks: Vec<(usize, StructureEstimate)> = (0..spec.trials)
        .step_by(SCREENS_PER_CHUNK)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|first| {
            let last = (first + SCREENS_PER_CHUNK).min(spec.trials);
            let screens: Vec<_> = (first..last)
                .map(|t| {
                    fractal.generate_screen(&mut trial_rng(spec.seed, t as u64, Stream::Screen))
                })
                .collect();
            Ok((screens.len(), empirical_structure_function(&screens)?))
        })
        .collect::<Result<_>>()?;
    Ok(StructureEstimate::weighted_mean(&chunks)?)
}

/// One line of the benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub p: u32,
    pub side: usize,
    pub unknowns: usize,
    pub apply_k_flops: u64,
    pub apply_k_model: u64,
    pub apply_k_seconds: f64,
    pub apply_a_flops: u64,
    pub apply_a_seconds: f64,
    pub iterations: usize,
    /// Mean solver flops per iteration, excluding the setup.
    pub iteration_flops: f64,
    pub reconstruct_flops: u64,
    pub reconstruct_seconds: f64,
    pub precompute_seconds: f64,
}

impl BenchRow {
    pub fn apply_a_per_unknown(&self) -> f64 {
        self.apply_a_flops as f64 / self.unknowns as f64
    }

    pub fn iteration_per_unknown(&self) -> f64 {
        self.iteration_flops / self.unknowns as f64
    }

    pub fn reconstruct_per_unknown(&self) -> f64 {
        self.reconstruct_flops as f64 / self.unknowns as f64
    }

    /// Measured reconstruction flops over `(23 + c·iterations)·N`.
    pub fn ratio_to_model(&self, preconditioned: bool) -> f64 {
        self.reconstruct_flops as f64
            / FlopModel::total(
                FlopModel::TABLE_OVERHEAD,
                preconditioned,
                self.iterations,
                self.unknowns,
            )
    }
}

fn mean_seconds(reps: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let start = Instant::now();
    for _ in 0..reps {
        f()?;
    }
    Ok(start.elapsed().as_secs_f64() / reps as f64)
}

/// Measures operator and reconstruction costs for each `p` in `ps`.
///
/// With `flops_only`, preconditioned variants use a unit diagonal of the
/// requested kind: operation counts are exact, the O(N²) precompute is
/// skipped, and the residuals are not meaningful.
pub fn bench(spec: &ExperimentSpec, ps: &[u32], flops_only: bool) -> Result<Vec<BenchRow>> {
    let variant = *spec
        .variants
        .first()
        .ok_or_else(|| ValidationError::new("a --method is required"))?;
    let mut rows = Vec::with_capacity(ps.len());
    for &p in ps {
        let spec = ExperimentSpec {
            p,
            variants: vec![variant],
            tolerance: f64::MIN_POSITIVE,
            ..spec.clone()
        };
        spec.validate()?;
        let side = spec.side();
        let n = side * side;
        let pupil = Pupil::annular(side)?;
        let fractal = FractalOperator::kolmogorov(spec.r0, side)?;
        let (truth, slopes) = draw_trial(&fractal, &pupil, spec.noise_std, spec.seed, 0)?;
        let weights = slopes.inverse_variances();
        let reps = (1 << 20) / n + 1;

        let mut v = truth.values().to_vec();
        let mut apply_k_flops = 0;
        let apply_k_seconds = mean_seconds(reps, || {
            apply_k_flops = fractal.apply(Transform::Forward, &mut v)?;
            Ok(())
        })?;

        let config = spec.solver_config(variant);
        let start = Instant::now();
        let rec = if flops_only && variant.preconditioner != Preconditioner::None {
            let unit =
                DiagonalPreconditioner::new(variant.preconditioner, variant.space, vec![1.0; n])?;
            Reconstructor::with_preconditioner(pupil, fractal, weights, config, Some(unit))?
        } else {
            Reconstructor::new(pupil, fractal, weights, config)?
        };
        let precompute_seconds = start.elapsed().as_secs_f64();

        let system = rec.normal_equations();
        let x = truth.values().to_vec();
        let mut y = vec![0.0; n];
        let mut counter = FlopCounter::new();
        let apply_a_seconds = mean_seconds(reps, || {
            counter.reset();
            system.apply(&x, &mut y, &mut counter)?;
            Ok(())
        })?;
        let apply_a_flops = counter.total();

        let start = Instant::now();
        let out = rec.reconstruct(&slopes, None)?;
        let reconstruct_seconds = start.elapsed().as_secs_f64();

        rows.push(BenchRow {
            p,
            side,
            unknowns: n,
            apply_k_flops,
            apply_k_model: FlopModel::fractal_operator(n),
            apply_k_seconds,
            apply_a_flops,
            apply_a_seconds,
            iterations: out.trace.iterations(),
            iteration_flops: (out.trace.last().flops - out.trace.rows[0].flops) as f64
                / out.trace.iterations().max(1) as f64,
            reconstruct_flops: out.flops.total(),
            reconstruct_seconds,
            precompute_seconds,
        });
    }
    Ok(rows)
}

/// Largest relative spread `(max − min)/min` of a per-unknown quantity.
pub fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(v), h.max(v))
        });
    (hi - lo) / lo
}

/// Tolerated spread of flops per unknown across grid sizes.
pub const LINEAR_SCALING_TOLERANCE: f64 = 0.10;

/// Errors unless flops per unknown stay within the linear-scaling tolerance.
pub fn check_linear_scaling(rows: &[BenchRow]) -> Result<()> {
    for (what, s) in [
        (
            "apply_A",
            spread(rows.iter().map(BenchRow::apply_a_per_unknown)),
        ),
        (
            "reconstruct",
            spread(rows.iter().map(BenchRow::reconstruct_per_unknown)),
        ),
    ] {
        if s > LINEAR_SCALING_TOLERANCE {
            bail!(
                "{what} flops per unknown vary by {:.1}% across sizes",
                100.0 * s
            );
        }
    }
    Ok(())
}
