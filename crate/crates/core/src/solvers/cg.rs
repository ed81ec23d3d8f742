use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgOptions {
    /// Stop when `‖b − Ax‖₂ / ‖b‖₂ ≤ tolerance`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Replace the recursive residual with `b − Ax` every this many iterations.
    pub true_residual_interval: usize,
}

impl CgOptions {
    pub const DEFAULT_TOLERANCE: f64 = 1e-10;

    /// Defaults for an `n`-dimensional system: tolerance 1e-10, budget `5n`.
    pub fn for_dim(n: usize) -> Self {
        Self {
            tolerance: Self::DEFAULT_TOLERANCE,
            max_iterations: 5 * n.max(1),
            true_residual_interval: 10,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgRunReport {
    pub iterations: usize,
    /// Relative residual after each iteration; the last entry is the one
    /// the stopping decision was made on.
    pub relative_residual_trace: Vec<f64>,
    pub converged: bool,
    pub tolerance: f64,
    /// `‖x_k − x_true‖ / ‖x_true‖` when the true solution is known.
    pub recovered_solution_error: Option<f64>,
}

impl CgRunReport {
    pub fn final_relative_residual(&self) -> f64 {
        self.relative_residual_trace.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub report: CgRunReport,
    pub solution: DVector<f64>,
}

/// Unpreconditioned conjugate gradient for `A x = b`, starting from zero.
///
/// `apply_a` is the only access to the operator. Convergence on the
/// recursive residual is always confirmed against the true residual before
/// stopping.
pub fn conjugate_gradient<F>(apply_a: F, b: &DVector<f64>, options: &CgOptions) -> Result<CgOutcome>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    if !(options.tolerance > 0.0) {
        return Err(Error::param(format!(
            "tolerance must be positive, got {}",
            options.tolerance
        )));
    }
    let n = b.len();
    let mut x = DVector::zeros(n);
    let b_norm = b.norm();
    let mut trace = Vec::new();
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            report: CgRunReport {
                iterations: 0,
                relative_residual_trace: trace,
                converged: true,
                tolerance: options.tolerance,
                recovered_solution_error: None,
            },
            solution: x,
        });
    }

    let true_residual = |x: &DVector<f64>| -> DVector<f64> {
        let ax = apply_a(x);
        check_len(&ax, n);
        b - ax
    };

    let mut r = b.clone();
    let mut d = r.clone();
    let mut rr = r.dot(&r);
    let interval = options.true_residual_interval.max(1);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        let ad = apply_a(&d);
        check_len(&ad, n);
        let curvature = d.dot(&ad);
        if !(curvature > 0.0) {
            return Err(Error::Indefinite {
                iteration: iterations,
                curvature,
            });
        }
        let alpha = rr / curvature;
        x.axpy(alpha, &d, 1.0);
        if iterations % interval == 0 {
            r = true_residual(&x);
        } else {
            r.axpy(-alpha, &ad, 1.0);
        }
        let mut rr_next = r.dot(&r);
        let mut rel = rr_next.sqrt() / b_norm;
        if rel <= options.tolerance {
            r = true_residual(&x);
            rr_next = r.dot(&r);
            rel = rr_next.sqrt() / b_norm;
            if rel <= options.tolerance {
                trace.push(rel);
                converged = true;
                break;
            }
        }
        trace.push(rel);
        let beta = rr_next / rr;
        d = &r + &d * beta;
        rr = rr_next;
    }

    Ok(CgOutcome {
        report: CgRunReport {
            iterations,
            relative_residual_trace: trace,
            converged,
            tolerance: options.tolerance,
            recovered_solution_error: None,
        },
        solution: x,
    })
}

fn check_len(v: &DVector<f64>, n: usize) {
    assert_eq!(v.len(), n, "operator returned a vector of the wrong length");
}

/// Forms `b = A x_true`, solves, and records the recovery error.
pub fn solve_for_known_solution<F>(
    apply_a: F,
    x_true: &DVector<f64>,
    options: &CgOptions,
) -> Result<CgOutcome>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let b = apply_a(x_true);
    let mut outcome = conjugate_gradient(&apply_a, &b, options)?;
    let denom = x_true.norm();
    let err = (&outcome.solution - x_true).norm();
    outcome.report.recovered_solution_error = Some(if denom > 0.0 { err / denom } else { err });
    Ok(outcome)
}
