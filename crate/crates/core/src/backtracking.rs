//! Armijo-type stepsize search with a growth factor between searches.

use nalgebra::DVector;
use thiserror::Error;

use crate::losses::{LossError, Objective};

/// Trial stepsizes below this abort the search.
pub const STEPSIZE_FLOOR: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum BacktrackError {
    #[error("stepsize underflowed below {STEPSIZE_FLOOR:e} after {trials} trials")]
    NonTermination { trials: usize },
    #[error("initial stepsize must be positive and finite, got {0}")]
    InvalidStepsize(f64),
    #[error(transparent)]
    Loss(#[from] LossError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktrackResult {
    /// Accepted stepsize, `γθ / 2^(trials-1)`.
    pub stepsize: f64,
    /// Number of sufficient-decrease checks performed, at least one.
    pub trials: usize,
    /// Accepted point `x + stepsize · direction`.
    pub point: DVector<f64>,
}

/// Starts from `θ⁺ = γθ` and halves `θ⁺` while
/// `f(x⁺) > f(x) + ⟨∇f(x), x⁺ - x⟩ + δ/(2θ⁺) ‖x⁺ - x‖²`, with
/// `x⁺ = x + θ⁺ · direction`. Ties accept.
pub fn backtrack<F: Objective + ?Sized>(
    theta: f64,
    f: &F,
    x: &DVector<f64>,
    direction: &DVector<f64>,
    gamma: f64,
    delta: f64,
) -> Result<BacktrackResult, BacktrackError> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(BacktrackError::InvalidStepsize(theta));
    }
    f.check_dim(direction)?;
    let (fx, grad) = f.value_and_gradient(x)?;
    let mut stepsize = gamma * theta;
    let mut trials = 1;
    loop {
        let point = x + direction * stepsize;
        let step = &point - x;
        // f(x⁺) - f(x) - ⟨∇f(x), x⁺ - x⟩ against the quadratic model term
        let gap = f.linearization_gap(x, fx, &grad, &step)?;
        if gap <= delta / (2.0 * stepsize) * step.norm_squared() {
            return Ok(BacktrackResult {
                stepsize,
                trials,
                point,
            });
        }
        stepsize *= 0.5;
        trials += 1;
        if stepsize < STEPSIZE_FLOOR {
            return Err(BacktrackError::NonTermination { trials });
        }
    }
}
