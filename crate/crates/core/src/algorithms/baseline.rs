use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    check_shapes, communication_step, guard_divergence, local_searches, local_update, min_max,
    validate_delta, validate_stepsize, AlgorithmError, CommStats, DecentralizedMethod,
    GammaSchedule, NeighborExchange, StepsizeSummary,
};
use crate::losses::LossFamily;
use crate::topology::GossipMatrix;

/// How the predecessor method synchronizes the backtracked stepsizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinConsensusMode {
    /// Network-wide minimum, charged as `d_G` flooding rounds.
    Global,
    /// One round of local min-consensus.
    Local,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineParams {
    pub delta: f64,
    pub gamma: GammaSchedule,
    pub mode: MinConsensusMode,
}

impl BaselineParams {
    pub fn new(mode: MinConsensusMode) -> Self {
        Self {
            delta: 1.0,
            gamma: GammaSchedule::default(),
            mode,
        }
    }
}

/// State of the adaptive predecessor that uses a single stepsize matrix
/// `Θ` for both the primal and the dual update.
#[derive(Debug, Clone)]
pub struct BaselineState {
    pub params: BaselineParams,
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    /// `θ^{k-1}`.
    pub theta: Vec<f64>,
    pub k: u64,
    exchange: NeighborExchange,
    flood_rounds: Option<usize>,
}

impl BaselineState {
    pub fn new(x0: DMatrix<f64>, theta0: f64, params: BaselineParams) -> Result<Self, AlgorithmError> {
        validate_delta(params.delta)?;
        validate_stepsize(theta0)?;
        params.gamma.validate()?;
        let m = x0.nrows();
        let y0 = DMatrix::zeros(m, x0.ncols());
        Ok(Self {
            params,
            x: x0,
            y: y0,
            theta: vec![theta0; m],
            k: 0,
            exchange: NeighborExchange::new(),
            flood_rounds: None,
        })
    }

    pub fn with_iterate(mut self, x: DMatrix<f64>, y: DMatrix<f64>) -> Self {
        self.x = x;
        self.y = y;
        self
    }

    pub fn exchange(&self) -> &NeighborExchange {
        &self.exchange
    }

    pub fn step(&mut self, gm: &GossipMatrix, family: &LossFamily) -> Result<(), AlgorithmError> {
        check_shapes(gm, family, &self.x)?;
        let graph = gm.graph();
        let m = graph.agents();
        let gamma = self.params.gamma.growth_at_iteration(self.k);

        let half = communication_step(&mut self.exchange, gm, family, &self.x, &self.y)?;
        let theta_bar = local_searches(family, &half, &self.theta, &vec![gamma; m], self.params.delta)?;
        let theta = match self.params.mode {
            MinConsensusMode::Global => {
                let rounds = match self.flood_rounds {
                    Some(r) => r,
                    None => {
                        let r = graph
                            .diameter()
                            .map_err(|e| AlgorithmError::InvalidParameter(e.to_string()))?;
                        self.flood_rounds = Some(r);
                        r
                    }
                };
                self.exchange.charge_flooding(graph, rounds)?;
                vec![min_max(&theta_bar).0; m]
            }
            MinConsensusMode::Local => {
                self.exchange.scalar_round(graph, 1)?;
                super::local_min_consensus(&theta_bar, graph)
            }
        };

        let (x_next, y_next) = local_update(&mut self.exchange, gm, &self.x, &half, &theta, &theta)?;
        guard_divergence(&x_next, self.k)?;
        self.x = x_next;
        self.y = y_next;
        self.theta = theta;
        self.k += 1;
        Ok(())
    }
}

/// One iteration of the predecessor method.
pub fn baseline_adaptive_step(
    state: &mut BaselineState,
    gm: &GossipMatrix,
    family: &LossFamily,
) -> Result<(), AlgorithmError> {
    state.step(gm, family)
}

impl DecentralizedMethod for BaselineState {
    fn step(&mut self, gm: &GossipMatrix, family: &LossFamily) -> Result<(), AlgorithmError> {
        BaselineState::step(self, gm, family)
    }

    fn primal(&self) -> &DMatrix<f64> {
        &self.x
    }

    fn dual(&self) -> Option<&DMatrix<f64>> {
        Some(&self.y)
    }

    fn iteration(&self) -> u64 {
        self.k
    }

    fn comm(&self) -> CommStats {
        self.exchange.stats()
    }

    fn stepsizes(&self) -> StepsizeSummary {
        let (theta_min, theta_max) = min_max(&self.theta);
        StepsizeSummary {
            theta_min,
            theta_max,
            ..Default::default()
        }
    }

    fn merit_stepsize(&self) -> Option<f64> {
        Some(min_max(&self.theta).0)
    }

    fn vector_rounds_per_iteration(&self) -> u64 {
        3
    }
}
