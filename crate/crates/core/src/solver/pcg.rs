use crate::error::{check_len, Error, Result};
use crate::metrics::{strehl, FlopCounter};

use super::config::{InitialGuess, SolverConfig};
use super::precond::DiagonalPreconditioner;
use super::system::LinearOperator;

/// Tracks the distance of the iterates to a known truth.
pub trait Monitor {
    /// Piston-removed residual variance of the estimate given by iterate `x`.
    fn residual_variance(&mut self, x: &[f64]) -> Result<f64>;

    /// Variance used to normalize the residual.
    fn reference_variance(&self) -> f64;
}

/// One row per iterate, starting with the initial guess.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    /// Cumulative flops, including the initialization.
    pub flops: u64,
    /// `‖r_k‖`
    pub rnorm: f64,
    pub resid_var: Option<f64>,
    pub resid_var_norm: Option<f64>,
    pub strehl: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Tolerance,
    /// `r_kᵀ·z_k` vanished.
    ExactSolution,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
    pub stop: StopReason,
}

impl ConvergenceTrace {
    /// Number of updates performed.
    pub fn iterations(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn converged(&self) -> bool {
        self.stop != StopReason::MaxIterations
    }

    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("trace has the initial row")
    }
}

fn dot(a: &[f64], b: &[f64], flops: &mut FlopCounter) -> f64 {
    flops.dot(a.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients for `A·x = b` with `A` symmetric
/// positive definite.
///
/// `flops` accumulates the solver's own work, on top of whatever it already
/// holds (e.g. the cost of forming `b`). Monitor evaluations are not counted.
pub fn pcg_solve(
    a: &dyn LinearOperator,
    b: &[f64],
    config: &SolverConfig,
    preconditioner: Option<&DiagonalPreconditioner>,
    mut monitor: Option<&mut dyn Monitor>,
    flops: &mut FlopCounter,
) -> Result<(Vec<f64>, ConvergenceTrace)> {
    config.validate()?;
    let n = a.dim();
    check_len(n, b.len())?;
    if let Some(p) = preconditioner {
        check_len(n, p.values().len())?;
    }

    let mut x;
    let mut r;
    match &config.initial {
        InitialGuess::Zero => {
            x = vec![0.0; n];
            r = b.to_vec();
        }
        InitialGuess::Provided(x0) => {
            check_len(n, x0.len())?;
            x = x0.clone();
            r = vec![0.0; n];
            a.apply(&x, &mut r, flops)?;
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri = bi - *ri;
            }
            flops.add(crate::metrics::FlopCategory::Vector, n as u64);
        }
    }
    let bnorm = dot(b, b, flops).sqrt();

    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut rho_prev = 0.0;
    let mut rows = Vec::with_capacity(config.max_iterations + 1);

    let mut k = 0;
    let stop = loop {
        let rr = dot(&r, &r, flops);
        let rnorm = rr.sqrt();
        let (resid_var, resid_var_norm, s) = match monitor.as_deref_mut() {
            Some(m) => {
                let v = m.residual_variance(&x)?;
                (Some(v), Some(v / m.reference_variance()), Some(strehl(v)))
            }
            None => (None, None, None),
        };
        rows.push(TraceRow {
            iter: k,
            flops: flops.total(),
            rnorm,
            resid_var,
            resid_var_norm,
            strehl: s,
        });

        if rnorm <= config.tolerance * bnorm {
            break StopReason::Tolerance;
        }
        if k == config.max_iterations {
            break StopReason::MaxIterations;
        }

        let rho = match preconditioner {
            Some(m) => {
                m.apply(&r, &mut z, flops);
                dot(&r, &z, flops)
            }
            None => {
                z.copy_from_slice(&r);
                rr
            }
        };
        if rho == 0.0 {
            break StopReason::ExactSolution;
        }
        if k == 0 {
            p.copy_from_slice(&z);
        } else {
            let beta = rho / rho_prev;
            for (pi, zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
            flops.axpy(n);
        }
        a.apply(&p, &mut q, flops)?;
        let curvature = dot(&p, &q, flops);
        if !(curvature > 0.0) {
            return Err(Error::Indefinite {
                iteration: k,
                curvature,
            });
        }
        let alpha = rho / curvature;
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += alpha * pi;
        }
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= alpha * qi;
        }
        flops.axpy(n);
        flops.axpy(n);
        rho_prev = rho;
        k += 1;
    };
    Ok((x, ConvergenceTrace { rows, stop }))
}
