//! Coordinate descent for the per-column penalized quadratic programs
//!
//! Minimizes `theta -> theta' Gamma theta / 2 - g' theta + sum_k lambda_k |theta_k|`
//! over one column's stacked parameter vector. Entries with
//! `lambda_k = 0` are unpenalized.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Output of a quadratic-program solve.
#[derive(Clone, Debug)]
pub struct QpSolution {
    pub theta: DVector<f64>,
    /// Full sweeps performed.
    pub iterations: usize,
    /// False when the sweep budget ran out before the tolerance was met.
    pub converged: bool,
}

pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Cyclic coordinate descent with an incrementally maintained
/// `Gamma * theta`. Stops when the largest coordinate update in a full
/// sweep is at most `tol`.
pub fn solve_penalized_qp(
    gamma: &DMatrix<f64>,
    g: &DVector<f64>,
    lambda: &DVector<f64>,
    warm: Option<&DVector<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<QpSolution> {
    let p = gamma.nrows();
    if gamma.ncols() != p || g.len() != p || lambda.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: gamma.ncols().max(g.len()).max(lambda.len()) });
    }
    for k in 0..p {
        if !(gamma[(k, k)] > 0.0) {
            return Err(Error::NonPositiveDenominator {
                context: "quadratic form diagonal",
                value: gamma[(k, k)],
            });
        }
        if !(lambda[k] >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative penalty lambda_{k}")));
        }
    }

    let mut theta = match warm {
        Some(w) if w.len() == p => w.clone(),
        Some(w) => return Err(Error::DimensionMismatch { expected: p, got: w.len() }),
        None => DVector::zeros(p),
    };
    let mut q = gamma * &theta;

    for sweep in 1..=max_iter {
        let mut max_change = 0.0f64;
        for k in 0..p {
            let old = theta[k];
            let partial = g[k] - (q[k] - gamma[(k, k)] * old);
            let new = soft_threshold(partial, lambda[k]) / gamma[(k, k)];
            if new != old {
                let delta = new - old;
                q.axpy(delta, &gamma.column(k).into_owned(), 1.0);
                theta[k] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if !max_change.is_finite() {
            return Err(Error::NonFinite("coordinate descent update"));
        }
        if max_change <= tol {
            return Ok(QpSolution { theta, iterations: sweep, converged: true });
        }
    }
    Ok(QpSolution { theta, iterations: max_iter, converged: false })
}

/// Largest violation of the subgradient optimality conditions at
/// `theta`: `|grad_k|` for unpenalized coordinates,
/// `|grad_k + lambda_k sign(theta_k)|` for active penalized ones, and
/// `max(0, |grad_k| - lambda_k)` at zeros.
pub fn kkt_residual(
    gamma: &DMatrix<f64>,
    g: &DVector<f64>,
    lambda: &DVector<f64>,
    theta: &DVector<f64>,
) -> f64 {
    let grad = gamma * theta - g;
    let mut worst = 0.0f64;
    for k in 0..g.len() {
        let v = if lambda[k] == 0.0 {
            grad[k].abs()
        } else if theta[k] != 0.0 {
            (grad[k] + lambda[k] * theta[k].signum()).abs()
        } else {
            (grad[k].abs() - lambda[k]).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}
