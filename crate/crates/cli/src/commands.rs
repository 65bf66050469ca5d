use anyhow::{bail, Context, Result};
use wavefront_core::fractal::scales_for_side;
use wavefront_core::seeding::{trial_rng, Stream};
use wavefront_core::solver::Reconstruction;
use wavefront_core::turbulence::KOLMOGOROV_COEFFICIENT;
use wavefront_core::{FractalOperator, PhaseGrid, Pupil, Reconstructor};

use crate::args::{
    BenchArgs, Cli, Command, GenerateArgs, ReconstructArgs, SenseArgs, SimulateArgs, ValidateSfArgs,
};
use crate::error::ValidationError;
use crate::experiment::{self, ExperimentSpec};
use crate::formats;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(&a).map(|_| ()),
        Command::Sense(a) => sense(&a),
        Command::Reconstruct(a) => reconstruct(&a).map(|_| ()),
        Command::Simulate(a) => simulate(&a),
        Command::ValidateSf(a) => validate_sf(&a),
        Command::Bench(a) => bench(&a),
    }
}

fn grid_spec(p: u32, r0: f64) -> Result<ExperimentSpec> {
    let spec = ExperimentSpec {
        p,
        r0,
        ..ExperimentSpec::default()
    };
    spec.validate()?;
    Ok(spec)
}

pub fn generate(a: &GenerateArgs) -> Result<PhaseGrid> {
    let spec = grid_spec(a.grid.p, a.grid.r0)?;
    let fractal = FractalOperator::kolmogorov(spec.r0, spec.side())?;
    let screen = fractal.generate_screen(&mut trial_rng(a.seed, 0, Stream::Screen));
    formats::write_grid(&a.out, &screen)?;
    println!(
        "wrote {}×{} screen to {}",
        screen.side(),
        screen.side(),
        a.out.display()
    );
    Ok(screen)
}

pub fn sense(a: &SenseArgs) -> Result<()> {
    let screen = formats::read_grid(&a.screen)?;
    let pupil = Pupil::annular(screen.side())?;
    let slopes = pupil.simulate_measurements(
        &screen,
        a.noise_std,
        &mut trial_rng(a.seed, 0, Stream::Noise),
    )?;
    let comment = format!(
        "wavefront sense screen={} side={} noise_std={} seed={}",
        a.screen.display(),
        screen.side(),
        a.noise_std,
        a.seed
    );
    formats::write_slopes(&a.out, &comment, &slopes)?;
    println!(
        "wrote {} subapertures to {}",
        slopes.num_subapertures(),
        a.out.display()
    );
    Ok(())
}

pub fn reconstruct(a: &ReconstructArgs) -> Result<Reconstruction> {
    let spec = ExperimentSpec {
        p: a.grid.p,
        r0: a.grid.r0,
        variants: vec![a.solver.method],
        max_iterations: a.solver.max_iter,
        tolerance: a.solver.tol,
        trials: 1,
        ..ExperimentSpec::default()
    };
    spec.validate()?;
    let side = spec.side();
    let slopes = formats::read_slopes(&a.slopes)?;
    let pupil = Pupil::annular(side)?;
    formats::check_slopes_pupil(&slopes, &pupil)?;
    let truth = match &a.truth {
        Some(path) => {
            let t = formats::read_grid(path)?;
            if t.side() != side {
                bail!(ValidationError::new(format!(
                    "truth has side {}, expected {side}",
                    t.side()
                )));
            }
            Some(t)
        }
        None => None,
    };
    let fractal = FractalOperator::kolmogorov(spec.r0, side)?;
    let weights = slopes.inverse_variances();
    let config = spec.solver_config(a.solver.method);
    let rec = match &a.solver.cache_dir {
        Some(dir) => Reconstructor::with_cache(pupil, fractal, weights, config, dir)?,
        None => Reconstructor::new(pupil, fractal, weights, config)?,
    };
    let out = rec.reconstruct(&slopes, truth.as_ref())?;
    formats::write_grid(&a.out, &out.wavefront)?;
    if let Some(path) = &a.trace {
        let comment = format!(
            "wavefront reconstruct p={} side={side} r0={} method={} max_iter={} tol={} slopes={} truth={}",
            spec.p,
            spec.r0,
            a.solver.method,
            spec.max_iterations,
            spec.tolerance,
            a.slopes.display(),
            a.truth.as_ref().map(|t| t.display().to_string()).unwrap_or_else(|| "none".into())
        );
        formats::write_trace(path, &comment, &out.trace.rows)?;
    }
    let last = out.trace.last();
    println!(
        "{}: {} iterations, {} flops ({:.1} per unknown), |r| = {:.3e}",
        a.solver.method,
        out.trace.iterations(),
        out.flops.total(),
        out.flops.total() as f64 / (side * side) as f64,
        last.rnorm
    );
    if let Some(r) = &out.residual {
        println!(
            "residual rms {:.4} rad, strehl {:.4}",
            r.rms,
            (-r.variance).exp()
        );
    }
    Ok(out)
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let spec = ExperimentSpec {
        p: a.grid.p,
        r0: a.grid.r0,
        noise_std: a.noise_std,
        variants: a.method.clone(),
        max_iterations: a.max_iter,
        tolerance: a.tol,
        trials: a.trials,
        seed: a.seed,
    };
    let sim = experiment::simulate(&spec, a.cache_dir.as_deref())?;
    let mut w = formats::csv_writer(&a.out, &spec.describe("simulate"))?;
    let mut header = vec!["method"];
    header.extend(formats::TRACE_HEADER);
    w.write_record(&header)?;
    for curve in &sim.curves {
        for r in &curve.rows {
            w.write_record([
                curve.variant.name().to_string(),
                r.iter.to_string(),
                r.flops.to_string(),
                formats::num(r.rnorm),
                formats::num(r.resid_var),
                formats::num(r.resid_var_norm),
                formats::num(r.strehl),
            ])?;
        }
    }
    w.flush()?;
    for curve in &sim.curves {
        let last = curve.rows.last().expect("at least one row");
        println!(
            "{:<10} iter 1: {:.4}  iter {}: {:.4} (normalized median residual variance)",
            curve.variant.name(),
            curve.normalized(1),
            last.iter,
            last.resid_var_norm
        );
    }
    Ok(())
}

pub fn validate_sf(a: &ValidateSfArgs) -> Result<()> {
    let spec = ExperimentSpec {
        p: a.p,
        r0: a.r0,
        trials: a.trials,
        seed: a.seed,
        ..ExperimentSpec::default()
    };
    let est = experiment::validate_structure(&spec)?;
    let theory = |r: f64| KOLMOGOROV_COEFFICIENT * (r / a.r0).powf(5.0 / 3.0);
    let bins = est.radial_profile();
    formats::write_structure(&a.out, &spec.describe("validate-sf"), &bins, theory)?;
    if let Some(path) = &a.map {
        let map = PhaseGrid::from_values(est.map_width(), est.map().to_vec())
            .context("structure map does not fit the grid format")?;
        formats::write_grid(path, &map)?;
    }
    let worst = bins
        .iter()
        .filter(|b| (2.0..=8.0).contains(&b.r))
        .map(|b| (b.value / theory(b.r) - 1.0).abs())
        .fold(0.0, f64::max);
    println!(
        "{} bins, largest relative deviation for 2 ≤ r ≤ 8: {:.1}%",
        bins.len(),
        100.0 * worst
    );
    Ok(())
}

pub fn bench(a: &BenchArgs) -> Result<()> {
    if a.p_min > a.p_max {
        bail!(ValidationError::new(format!(
            "--p-min {} exceeds --p-max {}",
            a.p_min, a.p_max
        )));
    }
    scales_for_side((1 << a.p_max) + 1).map_err(|e| ValidationError::new(e.to_string()))?;
    let spec = ExperimentSpec {
        r0: a.r0,
        noise_std: a.noise_std,
        variants: vec![a.method],
        max_iterations: a.max_iter,
        trials: 1,
        seed: a.seed,
        ..ExperimentSpec::default()
    };
    let ps: Vec<u32> = (a.p_min..=a.p_max).collect();
    let rows = experiment::bench(&spec, &ps, a.flops_only)?;
    let comment = format!(
        "wavefront bench p={}..{} r0={} noise_std={} method={} max_iter={} seed={} flops_only={}",
        a.p_min, a.p_max, a.r0, a.noise_std, a.method, a.max_iter, a.seed, a.flops_only
    );
    let mut w = formats::csv_writer(&a.out, &comment)?;
    w.write_record([
        "p",
        "side",
        "N",
        "apply_K_flops",
        "apply_K_6N_minus_14",
        "apply_K_seconds",
        "apply_A_flops",
        "apply_A_flops_per_N",
        "apply_A_seconds",
        "iterations",
        "iteration_flops_per_N",
        "reconstruct_flops",
        "reconstruct_flops_per_N",
        "reconstruct_seconds",
        "precompute_seconds",
    ])?;
    for r in &rows {
        w.write_record([
            r.p.to_string(),
            r.side.to_string(),
            r.unknowns.to_string(),
            r.apply_k_flops.to_string(),
            r.apply_k_model.to_string(),
            formats::num(r.apply_k_seconds),
            r.apply_a_flops.to_string(),
            formats::num(r.apply_a_per_unknown()),
            formats::num(r.apply_a_seconds),
            r.iterations.to_string(),
            formats::num(r.iteration_per_unknown()),
            r.reconstruct_flops.to_string(),
            formats::num(r.reconstruct_per_unknown()),
            formats::num(r.reconstruct_seconds),
            formats::num(r.precompute_seconds),
        ])?;
        println!(
            "p={} N={:>6} K={:>8} (6N-14={:>8}) A/N={:.2} reconstruct/N={:.2} in {:.3}s",
            r.p,
            r.unknowns,
            r.apply_k_flops,
            r.apply_k_model,
            r.apply_a_per_unknown(),
            r.reconstruct_per_unknown(),
            r.reconstruct_seconds
        );
    }
    w.flush()?;
    experiment::check_linear_scaling(&rows)
}
