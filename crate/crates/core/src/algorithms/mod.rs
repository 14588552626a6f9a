//! The fully decentralized adaptive primal-dual method, its adaptive
//! predecessor (global or local min-consensus on a single stepsize) and
//! EXTRA, all driven through a locality-checking exchange ledger.

mod adaptive;
mod baseline;
mod consensus;
mod exchange;
mod extra;
mod gamma;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::backtracking::{backtrack, BacktrackError};
use crate::losses::{LossError, LossFamily};
use crate::topology::GossipMatrix;

pub use adaptive::{
    adaptive_step, AdaptiveParams, AdaptiveState, AdaptiveStepRecord, Safeguard, StepsizeCoupling,
};
pub use baseline::{baseline_adaptive_step, BaselineParams, BaselineState, MinConsensusMode};
pub use consensus::{local_max_consensus, local_min_consensus};
pub use exchange::{CommStats, NeighborExchange};
pub use extra::{extra_step, ExtraState};
pub use gamma::{gamma_schedule, GammaSchedule};

/// Iterates whose Frobenius norm exceeds this are declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

#[derive(Debug, Error)]
pub enum AlgorithmError {
    #[error("agent {agent}: {source}")]
    Backtrack {
        agent: usize,
        #[source]
        source: BacktrackError,
    },
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("iterates diverged at iteration {iteration} (norm {norm:e})")]
    Diverged { iteration: u64, norm: f64 },
    #[error("message from {from} to {to} does not follow a graph edge")]
    Locality { from: usize, to: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Range summary of the stepsizes an algorithm is currently using.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepsizeSummary {
    pub theta_min: f64,
    pub theta_max: f64,
    pub pi_min: Option<f64>,
    pub pi_max: Option<f64>,
    pub d_max: Option<u64>,
}

/// Common driver interface used by the experiment harness.
pub trait DecentralizedMethod: Send {
    fn step(&mut self, gm: &GossipMatrix, family: &LossFamily) -> Result<(), AlgorithmError>;

    /// Current primal iterate `X^k`.
    fn primal(&self) -> &DMatrix<f64>;

    /// Current dual iterate `Y^k`, if the method keeps one.
    fn dual(&self) -> Option<&DMatrix<f64>>;

    fn iteration(&self) -> u64;

    fn comm(&self) -> CommStats;

    fn stepsizes(&self) -> StepsizeSummary;

    /// The primal stepsize that weighs the dual term of the strongly convex
    /// merit (`θ_min^{k-1}`), if the method has one.
    fn merit_stepsize(&self) -> Option<f64>;

    /// Vector gossip rounds charged per iteration.
    fn vector_rounds_per_iteration(&self) -> u64;
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Row `i` divided by `s_i`.
fn div_rows(x: &DMatrix<f64>, s: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] / s[i])
}

/// Row `i` multiplied by `s_i`.
fn mul_rows(x: &DMatrix<f64>, s: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * s[i])
}

fn check_shapes(gm: &GossipMatrix, family: &LossFamily, x: &DMatrix<f64>) -> Result<(), AlgorithmError> {
    if family.agents() != gm.agents() || x.nrows() != gm.agents() || x.ncols() != family.dim() {
        return Err(AlgorithmError::Shape(format!(
            "graph has {} agents, family {}x{}, iterate {}x{}",
            gm.agents(),
            family.agents(),
            family.dim(),
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(())
}

fn guard_divergence(x: &DMatrix<f64>, iteration: u64) -> Result<(), AlgorithmError> {
    let norm = x.norm();
    if !norm.is_finite() || norm > DIVERGENCE_THRESHOLD {
        return Err(AlgorithmError::Diverged { iteration, norm });
    }
    Ok(())
}

/// Gossip half-step shared by the primal-dual methods.
struct HalfStep {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    grad: DMatrix<f64>,
}

/// `X^{k+1/2} = W X^k`, `Y^{k+1/2} = W (Y^k + ∇F(X^{k+1/2}))`: two vector rounds.
fn communication_step(
    exchange: &mut NeighborExchange,
    gm: &GossipMatrix,
    family: &LossFamily,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> Result<HalfStep, AlgorithmError> {
    let x_half = exchange.gossip(gm, x)?;
    let grad = family.stacked_gradient(&x_half)?;
    let y_half = exchange.gossip(gm, &(y + &grad))?;
    Ok(HalfStep {
        x: x_half,
        y: y_half,
        grad,
    })
}

/// Local backtracking at every agent along `-y_i^{k+1/2}`.
fn local_searches(
    family: &LossFamily,
    half: &HalfStep,
    previous: &[f64],
    growth: &[f64],
    delta: f64,
) -> Result<Vec<f64>, AlgorithmError> {
    (0..family.agents())
        .map(|i| {
            let x = half.x.row(i).transpose();
            let dir = -half.y.row(i).transpose();
            backtrack(previous[i], family.loss(i), &x, &dir, growth[i], delta)
                .map(|r| r.stepsize)
                .map_err(|source| AlgorithmError::Backtrack { agent: i, source })
        })
        .collect()
}

/// `X^{k+1} = X^{k+1/2} - Θ Y^{k+1/2}` and
/// `Y^{k+1} = Y^{k+1/2} + (I - W) Π⁻¹ X^k - ∇F(X^{k+1/2})`, the latter
/// with one vector round for `W Π⁻¹ X^k`.
fn local_update(
    exchange: &mut NeighborExchange,
    gm: &GossipMatrix,
    x_k: &DMatrix<f64>,
    half: &HalfStep,
    primal: &[f64],
    dual: &[f64],
) -> Result<(DMatrix<f64>, DMatrix<f64>), AlgorithmError> {
    let x_next = &half.x - mul_rows(&half.y, primal);
    let scaled = div_rows(x_k, dual);
    let mixed = exchange.gossip(gm, &scaled)?;
    let y_next = &half.y + scaled - mixed - &half.grad;
    Ok((x_next, y_next))
}

fn validate_delta(delta: f64) -> Result<(), AlgorithmError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(AlgorithmError::InvalidParameter(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    Ok(())
}

fn validate_stepsize(theta0: f64) -> Result<(), AlgorithmError> {
    if !(theta0 > 0.0 && theta0.is_finite()) {
        return Err(AlgorithmError::InvalidParameter(format!(
            "initial stepsize must be positive, got {theta0}"
        )));
    }
    Ok(())
}
