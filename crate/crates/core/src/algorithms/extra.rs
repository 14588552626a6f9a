use nalgebra::DMatrix;

use super::{
    check_shapes, guard_divergence, AlgorithmError, CommStats, DecentralizedMethod, NeighborExchange,
    StepsizeSummary,
};
use crate::losses::LossFamily;
use crate::topology::GossipMatrix;

/// EXTRA with a fixed stepsize `α` and mixing pair `(W, (I + W)/2)`.
#[derive(Debug, Clone)]
pub struct ExtraState {
    pub alpha: f64,
    pub x: DMatrix<f64>,
    pub k: u64,
    x_prev: Option<DMatrix<f64>>,
    wx_prev: Option<DMatrix<f64>>,
    grad_prev: Option<DMatrix<f64>>,
    exchange: NeighborExchange,
}

impl ExtraState {
    pub fn new(x0: DMatrix<f64>, alpha: f64) -> Result<Self, AlgorithmError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(AlgorithmError::InvalidParameter(format!(
                "EXTRA stepsize must be positive, got {alpha}"
            )));
        }
        Ok(Self {
            alpha,
            x: x0,
            k: 0,
            x_prev: None,
            wx_prev: None,
            grad_prev: None,
            exchange: NeighborExchange::new(),
        })
    }

    pub fn step(&mut self, gm: &GossipMatrix, family: &LossFamily) -> Result<(), AlgorithmError> {
        check_shapes(gm, family, &self.x)?;
        let wx = self.exchange.gossip(gm, &self.x)?;
        let grad = family.stacked_gradient(&self.x)?;
        let next = match (&self.x_prev, &self.wx_prev, &self.grad_prev) {
            (Some(xp), Some(wxp), Some(gp)) => {
                &self.x + &wx - (xp + wxp) * 0.5 - (&grad - gp) * self.alpha
            }
            _ => &wx - &grad * self.alpha,
        };
        guard_divergence(&next, self.k)?;
        self.x_prev = Some(std::mem::replace(&mut self.x, next));
        self.wx_prev = Some(wx);
        self.grad_prev = Some(grad);
        self.k += 1;
        Ok(())
    }
}

/// One EXTRA iteration.
pub fn extra_step(state: &mut ExtraState, gm: &GossipMatrix, family: &LossFamily) -> Result<(), AlgorithmError> {
    state.step(gm, family)
}

impl DecentralizedMethod for ExtraState {
    fn step(&mut self, gm: &GossipMatrix, family: &LossFamily) -> Result<(), AlgorithmError> {
        ExtraState::step(self, gm, family)
    }

    fn primal(&self) -> &DMatrix<f64> {
        &self.x
    }

    fn dual(&self) -> Option<&DMatrix<f64>> {
        None
    }

    fn iteration(&self) -> u64 {
        self.k
    }

    fn comm(&self) -> CommStats {
        self.exchange.stats()
    }

    fn stepsizes(&self) -> StepsizeSummary {
        StepsizeSummary {
            theta_min: self.alpha,
            theta_max: self.alpha,
            ..Default::default()
        }
    }

    fn merit_stepsize(&self) -> Option<f64> {
        None
    }

    fn vector_rounds_per_iteration(&self) -> u64 {
        1
    }
}
