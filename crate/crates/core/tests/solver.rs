use nalgebra::{DMatrix, DVector};
use wavefront_core::fractal::Transform;
use wavefront_core::seeding::{trial_rng, Stream};
use wavefront_core::solver::dense::{assemble, fractal_matrix, reference_solve, slope_matrix};
use wavefront_core::solver::{
    build_jacobi, build_optimal_diagonal, pcg_solve, LinearOperator, NormalEquations,
};
use wavefront_core::{
    FlopCounter, FractalOperator, PhaseGrid, Preconditioner, Pupil, Reconstructor, SlopeSet,
    SolverConfig, SolverVariant, Space,
};

const SIDE: usize = 9;

struct Setup {
    pupil: Pupil,
    fractal: FractalOperator,
    truth: PhaseGrid,
    slopes: SlopeSet,
}

fn setup(noise_std: f64, seed: u64) -> Setup {
    let pupil = Pupil::annular(SIDE).unwrap();
    let fractal = FractalOperator::kolmogorov(2.0, SIDE).unwrap();
    let truth = fractal.generate_screen(&mut trial_rng(seed, 0, Stream::Screen));
    let slopes = pupil
        .simulate_measurements(&truth, noise_std, &mut trial_rng(seed, 0, Stream::Noise))
        .unwrap();
    Setup {
        pupil,
        fractal,
        truth,
        slopes,
    }
}

fn dense(op: &dyn LinearOperator) -> DMatrix<f64> {
    assemble(op).unwrap()
}

fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}

#[test]
fn normal_matrices_match_their_dense_definitions() {
    let s = setup(0.5, 1);
    let weights = s.slopes.inverse_variances();
    let sm = slope_matrix(&s.pupil);
    let w = DMatrix::from_diagonal(&DVector::from_column_slice(&weights));
    let data = sm.transpose() * w * &sm;
    let k = fractal_matrix(&s.fractal, Transform::Forward).unwrap();
    let k_inv = fractal_matrix(&s.fractal, Transform::Inverse).unwrap();

    let aw = dense(&NormalEquations::new(Space::W, &s.pupil, &s.fractal, &weights).unwrap());
    let expected_w = &data + k_inv.transpose() * &k_inv;
    assert!(rel_diff(&aw, &expected_w) <= 1e-12);
    assert!(rel_diff(&aw, &aw.transpose()) <= 1e-12);

    let au = dense(&NormalEquations::new(Space::U, &s.pupil, &s.fractal, &weights).unwrap());
    let expected_u = k.transpose() * &data * &k + DMatrix::identity(81, 81);
    assert!(rel_diff(&au, &expected_u) <= 1e-12);
    assert!(au.clone().cholesky().is_some());
    assert!(aw.cholesky().is_some());
}

#[test]
fn generator_space_operator_is_at_least_identity() {
    let s = setup(0.5, 2);
    let weights = s.slopes.inverse_variances();
    let a = NormalEquations::new(Space::U, &s.pupil, &s.fractal, &weights).unwrap();
    let mut rng = trial_rng(9, 0, Stream::Noise);
    for _ in 0..20 {
        let u: Vec<f64> = (0..81)
            .map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0))
            .collect();
        let mut y = vec![0.0; 81];
        a.apply(&u, &mut y, &mut FlopCounter::new()).unwrap();
        let quad: f64 = u.iter().zip(&y).map(|(a, b)| a * b).sum();
        let norm: f64 = u.iter().map(|v| v * v).sum();
        assert!(quad >= norm * (1.0 - 1e-12));
    }
}

#[test]
fn zero_data_weights_leave_identity_in_generator_space() {
    let s = setup(0.5, 3);
    let weights = vec![0.0; s.pupil.num_measurements()];
    let a = NormalEquations::new(Space::U, &s.pupil, &s.fractal, &weights).unwrap();
    let m = dense(&a);
    assert!(rel_diff(&m, &DMatrix::identity(81, 81)) <= 1e-15);
    let jac = build_jacobi(&a, Space::U).unwrap();
    assert!(jac.values().iter().all(|&v| (v - 1.0).abs() <= 1e-15));
}

#[test]
fn right_hand_sides() {
    let s = setup(0.5, 4);
    let weights = s.slopes.inverse_variances();
    let aw = NormalEquations::new(Space::W, &s.pupil, &s.fractal, &weights).unwrap();
    let au = NormalEquations::new(Space::U, &s.pupil, &s.fractal, &weights).unwrap();
    let mut flops = FlopCounter::new();

    let zero = vec![0.0; weights.len()];
    assert!(aw.rhs(&zero, &mut flops).unwrap().iter().all(|&v| v == 0.0));

    let mut single = zero.clone();
    single[0] = 1.0;
    let b = aw.rhs(&single, &mut flops).unwrap();
    let (ix, iy) = s.pupil.subaperture_positions().next().unwrap();
    let corners = [
        iy * SIDE + ix,
        iy * SIDE + ix + 1,
        (iy + 1) * SIDE + ix,
        (iy + 1) * SIDE + ix + 1,
    ];
    for (i, v) in b.iter().enumerate() {
        assert_eq!(*v != 0.0, corners.contains(&i), "sample {i}");
    }

    let bw = aw.rhs(s.slopes.slopes(), &mut flops).unwrap();
    let bu = au.rhs(s.slopes.slopes(), &mut flops).unwrap();
    let kt = fractal_matrix(&s.fractal, Transform::Forward)
        .unwrap()
        .transpose();
    let expected = kt * DVector::from_column_slice(&bw);
    assert!(rel_err(&bu, expected.as_slice()) <= 1e-12);
}

#[test]
fn preconditioners_match_dense_oracle() {
    let s = setup(0.5, 5);
    let weights = s.slopes.inverse_variances();
    for space in [Space::W, Space::U] {
        let a = NormalEquations::new(space, &s.pupil, &s.fractal, &weights).unwrap();
        let m = dense(&a);
        let jac = build_jacobi(&a, space).unwrap();
        let opt = build_optimal_diagonal(&a, space).unwrap();
        for i in 0..81 {
            let diag = m[(i, i)];
            let row: f64 = m.row(i).iter().map(|v| v * v).sum();
            assert!((jac.values()[i] - diag).abs() <= 1e-12 * diag.abs());
            let q = diag / row;
            assert!((opt.values()[i] - q).abs() <= 1e-12 * q.abs());
        }
    }
}

#[test]
fn every_variant_matches_dense_solve() {
    let s = setup(0.5, 6);
    let weights = s.slopes.inverse_variances();
    let reference = reference_solve(&s.pupil, &s.fractal, &weights, s.slopes.slopes()).unwrap();
    for variant in SolverVariant::ALL {
        let config = SolverConfig::new(variant)
            .with_tolerance(1e-12)
            .with_max_iterations(500);
        let rec = Reconstructor::new(s.pupil.clone(), s.fractal.clone(), weights.clone(), config)
            .unwrap();
        let out = rec.reconstruct(&s.slopes, None).unwrap();
        assert!(out.trace.converged(), "{variant}");
        let err = rel_err(out.wavefront.values(), &reference);
        assert!(err <= 1e-8, "{variant}: {err:e}");
    }
}

#[test]
fn generator_and_wavefront_spaces_agree() {
    let s = setup(1.0, 7);
    let weights = s.slopes.inverse_variances();
    let solve = |space| {
        let config = SolverConfig::new(SolverVariant::new(space, Preconditioner::None))
            .with_tolerance(1e-12)
            .with_max_iterations(500);
        Reconstructor::new(s.pupil.clone(), s.fractal.clone(), weights.clone(), config)
            .unwrap()
            .reconstruct(&s.slopes, None)
            .unwrap()
    };
    let w = solve(Space::W);
    let u = solve(Space::U);
    let mut ku = u.solution.clone();
    s.fractal.apply(Transform::Forward, &mut ku).unwrap();
    assert!(rel_err(&ku, w.wavefront.values()) <= 1e-6);
    assert!(rel_err(u.wavefront.values(), w.wavefront.values()) <= 1e-6);
}

#[test]
fn zero_slopes_give_zero_wavefront() {
    let s = setup(0.5, 8);
    let zero = SlopeSet::new(
        &s.pupil,
        vec![0.0; s.pupil.num_measurements()],
        s.slopes.variance().to_vec(),
    )
    .unwrap();
    for variant in SolverVariant::ALL {
        let rec = Reconstructor::new(
            s.pupil.clone(),
            s.fractal.clone(),
            s.slopes.inverse_variances(),
            SolverConfig::new(variant),
        )
        .unwrap();
        let out = rec.reconstruct(&zero, None).unwrap();
        assert!(
            out.wavefront.values().iter().all(|&v| v == 0.0),
            "{variant}"
        );
    }
}

#[test]
fn noiseless_reconstruction_reaches_the_regularized_optimum() {
    let s = setup(0.0, 9);
    let weights = s.slopes.inverse_variances();
    let reference = reference_solve(&s.pupil, &s.fractal, &weights, s.slopes.slopes()).unwrap();
    let config = SolverConfig::new(SolverVariant::new(
        Space::U,
        Preconditioner::OptimalDiagonal,
    ))
    .with_tolerance(1e-12)
    .with_max_iterations(1000);
    let rec = Reconstructor::new(s.pupil.clone(), s.fractal.clone(), weights, config).unwrap();
    let out = rec.reconstruct(&s.slopes, Some(&s.truth)).unwrap();
    let gap = wavefront_core::metrics::residual_stats(out.wavefront.values(), &reference, &s.pupil)
        .unwrap();
    assert!(gap.rms <= 1e-6, "{:e}", gap.rms);
    let resid = out.residual.unwrap();
    let optimum =
        wavefront_core::metrics::residual_stats(&reference, s.truth.values(), &s.pupil).unwrap();
    assert!((resid.rms - optimum.rms).abs() <= 1e-6);
}

#[test]
fn a_norm_error_never_increases() {
    let s = setup(1.0, 10);
    let weights = s.slopes.inverse_variances();
    for space in [Space::W, Space::U] {
        let a = NormalEquations::new(space, &s.pupil, &s.fractal, &weights).unwrap();
        let m = dense(&a);
        let b = a.rhs(s.slopes.slopes(), &mut FlopCounter::new()).unwrap();
        let x_star = m
            .clone()
            .cholesky()
            .unwrap()
            .solve(&DVector::from_column_slice(&b));
        let mut prev = f64::INFINITY;
        for k in 1..=25 {
            let config = SolverConfig::new(SolverVariant::new(space, Preconditioner::Jacobi))
                .with_tolerance(1e-300)
                .with_max_iterations(k);
            let jac = build_jacobi(&a, space).unwrap();
            let (x, _) =
                pcg_solve(&a, &b, &config, Some(&jac), None, &mut FlopCounter::new()).unwrap();
            let e = DVector::from_column_slice(&x) - &x_star;
            let energy = (e.transpose() * &m * &e)[(0, 0)];
            assert!(
                energy <= prev * (1.0 + 1e-9) + 1e-20,
                "{space:?} iteration {k}"
            );
            prev = energy;
        }
    }
}

#[test]
fn repeated_runs_are_identical() {
    let run = || {
        let s = setup(1.0, 11);
        let rec = Reconstructor::new(
            s.pupil.clone(),
            s.fractal.clone(),
            s.slopes.inverse_variances(),
            SolverConfig::default().with_max_iterations(10),
        )
        .unwrap();
        rec.reconstruct(&s.slopes, Some(&s.truth)).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.wavefront, b.wavefront);
}

#[test]
fn trace_rows_carry_truth_statistics() {
    let s = setup(0.1, 12);
    let rec = Reconstructor::new(
        s.pupil.clone(),
        s.fractal.clone(),
        s.slopes.inverse_variances(),
        SolverConfig::default()
            .with_max_iterations(5)
            .with_tolerance(1e-300),
    )
    .unwrap();
    let out = rec.reconstruct(&s.slopes, Some(&s.truth)).unwrap();
    assert_eq!(out.trace.rows.len(), 6);
    let first = out.trace.rows[0];
    assert!((first.resid_var_norm.unwrap() - 1.0).abs() < 1e-12);
    for row in &out.trace.rows {
        let v = row.resid_var.unwrap();
        assert!((row.strehl.unwrap() - (-v).exp()).abs() < 1e-15);
    }
    assert!(out.trace.last().resid_var.unwrap() < first.resid_var.unwrap());
}

#[test]
fn mismatched_inputs_are_rejected() {
    let s = setup(1.0, 13);
    let other = Pupil::square(SIDE).unwrap();
    let rec = Reconstructor::new(
        s.pupil.clone(),
        s.fractal.clone(),
        s.slopes.inverse_variances(),
        SolverConfig::default(),
    )
    .unwrap();
    assert!(rec.reconstruct(&SlopeSet::zeros(&other), None).is_err());
    assert!(Reconstructor::new(
        other,
        s.fractal.clone(),
        vec![1.0; 3],
        SolverConfig::default()
    )
    .is_err());
    let bad = SolverConfig::default().with_max_iterations(0);
    assert!(Reconstructor::new(s.pupil, s.fractal, s.slopes.inverse_variances(), bad).is_err());
}
