use nalgebra::{DMatrix, DVector};

use super::{Loss, LossError, LossFamily, Objective};
use crate::topology::PINV_CUTOFF;

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Target for `‖Σ_i ∇f_i(x)‖`.
    pub tol: f64,
    /// Newton iteration cap for non-quadratic families.
    pub max_iterations: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 500,
        }
    }
}

/// Minimizer of `Σ_i f_i(x)`.
///
/// Quadratic families solve the normal equations directly (Cholesky, or the
/// minimum-norm solution when the system is singular, which is the limit
/// of every method started at zero). Other families use damped Newton with
/// Armijo backtracking.
pub fn centralized_solve(family: &LossFamily, opts: OracleOptions) -> Result<DVector<f64>, LossError> {
    let x = if family.is_quadratic() {
        solve_normal_equations(family)?
    } else {
        newton(family, opts)?
    };
    let grad_norm = family.sum_gradient(&x)?.norm();
    if grad_norm > opts.tol || !grad_norm.is_finite() {
        return Err(LossError::NonConvergence {
            iterations: 0,
            grad_norm,
        });
    }
    Ok(x)
}

fn solve_normal_equations(family: &LossFamily) -> Result<DVector<f64>, LossError> {
    let d = family.dim();
    let mut hess = DMatrix::zeros(d, d);
    let mut rhs = DVector::zeros(d);
    for loss in family.losses() {
        let Loss::Quadratic(q) = loss else {
            unreachable!("caller checked the family is quadratic")
        };
        hess += q.hessian();
        rhs += q.a().tr_mul(q.b()) * 2.0;
    }
    let solve = |r: &DVector<f64>| -> DVector<f64> {
        match hess.clone().cholesky() {
            Some(ch) => ch.solve(r),
            None => min_norm_solve(&hess, r),
        }
    };
    let mut x = solve(&rhs);
    // one round of iterative refinement
    let residual = &rhs - &hess * &x;
    x += solve(&residual);
    Ok(x)
}

fn min_norm_solve(a: &DMatrix<f64>, r: &DVector<f64>) -> DVector<f64> {
    let eig = a.clone().symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1.0);
    let coords = eig.eigenvectors.tr_mul(r);
    let scaled = DVector::from_fn(coords.len(), |i, _| {
        let l = eig.eigenvalues[i];
        if l.abs() <= PINV_CUTOFF * scale {
            0.0
        } else {
            coords[i] / l
        }
    });
    &eig.eigenvectors * scaled
}

fn newton(family: &LossFamily, opts: OracleOptions) -> Result<DVector<f64>, LossError> {
    let d = family.dim();
    let mut x = DVector::zeros(d);
    let mut grad_norm = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let mut value = 0.0;
        let mut grad = DVector::zeros(d);
        let mut hess = DMatrix::zeros(d, d);
        for loss in family.losses() {
            let (v, g) = loss.value_and_gradient(&x)?;
            value += v;
            grad += g;
            hess += loss.hessian(&x)?;
        }
        grad_norm = grad.norm();
        if grad_norm <= opts.tol {
            return Ok(x);
        }
        let step = regularized_newton_step(&hess, &grad);
        let slope = grad.dot(&step);
        let mut t = 1.0;
        loop {
            let trial = &x + &step * t;
            if family.sum_value(&trial)? <= value + 1e-4 * t * slope || t < 1e-20 {
                x = trial;
                break;
            }
            t *= 0.5;
        }
    }
    Err(LossError::NonConvergence {
        iterations: opts.max_iterations,
        grad_norm,
    })
}

// Solves (H + τI) s = -g, raising τ until the factorization succeeds.
fn regularized_newton_step(hess: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    let d = hess.nrows();
    let scale = hess.diagonal().amax().max(1e-300);
    let mut tau = 1e-12 * scale;
    loop {
        let shifted = hess + DMatrix::identity(d, d) * tau;
        if let Some(ch) = shifted.cholesky() {
            return -ch.solve(grad);
        }
        tau *= 10.0;
    }
}
