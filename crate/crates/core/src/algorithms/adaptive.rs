use nalgebra::DMatrix;

use super::{
    check_shapes, communication_step, guard_divergence, local_searches, local_update, min_max,
    validate_delta, validate_stepsize, AlgorithmError, CommStats, DecentralizedMethod,
    GammaSchedule, NeighborExchange, StepsizeSummary,
};
use crate::losses::LossFamily;
use crate::topology::{GossipMatrix, Graph};

/// How primal and dual stepsizes are synchronized after the local searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepsizeCoupling {
    /// Local min-consensus for `Θ`, tracked dual stepsizes `Π` and the
    /// running diameter estimate.
    #[default]
    Decentralized,
    /// Every agent uses the network-wide minimum for both `Θ` and `Π`.
    /// Charged as a flood of `d_G` scalar rounds; used to check the method
    /// against the globally synchronized predecessor.
    ForcedUniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveParams {
    /// Sufficient-decrease slack, in `(0, 1]`.
    pub delta: f64,
    pub gamma: GammaSchedule,
    pub coupling: StepsizeCoupling,
    /// Radius `R̃` of the boundedness safeguard; `None` disables it.
    pub safeguard_radius: Option<f64>,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        Self {
            delta: 1.0,
            gamma: GammaSchedule::default(),
            coupling: StepsizeCoupling::Decentralized,
            safeguard_radius: None,
        }
    }
}

/// Local binary flags `h_i` that freeze stepsize growth once an agent
/// leaves the ball of radius `R̃` around its starting point.
#[derive(Debug, Clone)]
pub struct Safeguard {
    pub radius: f64,
    /// `h_i ∈ {0, 1}`.
    pub bits: Vec<u8>,
    x0: DMatrix<f64>,
    y0: DMatrix<f64>,
}

impl Safeguard {
    fn new(radius: f64, x0: &DMatrix<f64>, y0: &DMatrix<f64>) -> Self {
        Self {
            radius,
            bits: vec![1; x0.nrows()],
            x0: x0.clone(),
            y0: y0.clone(),
        }
    }

    /// `γ̃_i = 1 + h_i (γ - 1)`, evaluated without round-off for `h ∈ {0, 1}`.
    pub fn growth(&self, gamma: f64) -> Vec<f64> {
        self.bits
            .iter()
            .map(|&h| if h == 1 { gamma } else { 1.0 })
            .collect()
    }
}

/// Diagnostics of the most recent iteration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdaptiveStepRecord {
    /// Iteration index `k` the record belongs to.
    pub iteration: u64,
    /// Accepted local searches `θ̄_i^k`.
    pub theta_bar: Vec<f64>,
    /// Growth factor each agent's search started from.
    pub growth: Vec<f64>,
    /// Agents whose own consensus test failed and triggered a doubling.
    pub failed_tests: Vec<usize>,
}

/// Full per-iteration state of the fully decentralized method.
///
/// Stepsize vectors hold the values of the previous iteration (`θ^{k-1}`,
/// `θ̃^{k-1}`, `π^{k-1}`), the diameter estimates hold `d^k`.
#[derive(Debug, Clone)]
pub struct AdaptiveState {
    pub params: AdaptiveParams,
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub theta: Vec<f64>,
    pub theta_tilde: Vec<f64>,
    pub pi: Vec<f64>,
    pub diam: Vec<u64>,
    pub k: u64,
    pub safeguard: Option<Safeguard>,
    pub last: Option<AdaptiveStepRecord>,
    exchange: NeighborExchange,
    flood_rounds: Option<usize>,
}

impl AdaptiveState {
    /// Starts from `X⁰`, `Y⁰ = 0`, every stepsize (and its auxiliary and
    /// dual copy) equal to `theta0`, and every diameter estimate equal to `d0`.
    pub fn new(
        x0: DMatrix<f64>,
        theta0: f64,
        d0: u64,
        params: AdaptiveParams,
    ) -> Result<Self, AlgorithmError> {
        validate_delta(params.delta)?;
        validate_stepsize(theta0)?;
        params.gamma.validate()?;
        if d0 == 0 {
            return Err(AlgorithmError::InvalidParameter(
                "initial diameter estimate must be >= 1".into(),
            ));
        }
        let m = x0.nrows();
        let y0 = DMatrix::zeros(m, x0.ncols());
        let safeguard = match params.safeguard_radius {
            Some(r) if r > 0.0 => Some(Safeguard::new(r, &x0, &y0)),
            Some(r) => {
                return Err(AlgorithmError::InvalidParameter(format!(
                    "safeguard radius must be positive, got {r}"
                )))
            }
            None => None,
        };
        Ok(Self {
            params,
            x: x0,
            y: y0,
            theta: vec![theta0; m],
            theta_tilde: vec![theta0; m],
            pi: vec![theta0; m],
            diam: vec![d0; m],
            k: 0,
            safeguard,
            last: None,
            exchange: NeighborExchange::new(),
            flood_rounds: None,
        })
    }

    /// Replaces the iterate, e.g. to start from a known fixed point.
    pub fn with_iterate(mut self, x: DMatrix<f64>, y: DMatrix<f64>) -> Self {
        if let Some(sg) = &mut self.safeguard {
            sg.x0 = x.clone();
            sg.y0 = y.clone();
        }
        self.x = x;
        self.y = y;
        self
    }

    pub fn exchange(&self) -> &NeighborExchange {
        &self.exchange
    }

    /// Safeguard update: refreshes `h^k` from the current
    /// iterate and returns each agent's backtracking growth factor.
    pub fn safeguard_update(&mut self, graph: &Graph, gamma: f64) -> Result<Vec<f64>, AlgorithmError> {
        let m = graph.agents();
        let Some(sg) = self.safeguard.as_mut() else {
            return Ok(vec![gamma; m]);
        };
        if self.k > 0 {
            self.exchange.scalar_round(graph, 1)?;
            let previous = sg.bits.clone();
            for i in 0..m {
                let primal = (self.x.row(i) - sg.x0.row(i)).norm();
                let dual = self.theta[i] * (self.y.row(i) - sg.y0.row(i)).norm();
                sg.bits[i] = if primal.max(dual) >= sg.radius {
                    0
                } else {
                    graph
                        .neighborhood(i)
                        .iter()
                        .map(|&j| previous[j])
                        .min()
                        .expect("neighborhoods are never empty")
                };
            }
        }
        Ok(sg.growth(gamma))
    }

    fn flood_rounds(&mut self, graph: &Graph) -> Result<usize, AlgorithmError> {
        if let Some(r) = self.flood_rounds {
            return Ok(r);
        }
        let r = graph
            .diameter()
            .map_err(|e| AlgorithmError::InvalidParameter(e.to_string()))?;
        self.flood_rounds = Some(r);
        Ok(r)
    }

    /// One full iteration: safeguard (when enabled), gossip, local searches,
    /// stepsize consensus, diameter update, primal-dual update.
    pub fn step(&mut self, gm: &GossipMatrix, family: &LossFamily) -> Result<(), AlgorithmError> {
        check_shapes(gm, family, &self.x)?;
        let graph = gm.graph();
        let m = graph.agents();
        let k = self.k;
        let gamma = self.params.gamma.growth_at_iteration(k);

        // safeguard bits
        let growth = self.safeguard_update(graph, gamma)?;

        // gossip X and the tracked gradients
        let half = communication_step(&mut self.exchange, gm, family, &self.x, &self.y)?;

        // local searches
        let theta_bar = local_searches(family, &half, &self.theta, &growth, self.params.delta)?;
        let mut failed_tests = Vec::new();
        let (theta, theta_tilde, pi, diam_next) = match self.params.coupling {
            StepsizeCoupling::ForcedUniform => {
                let rounds = self.flood_rounds(graph)?;
                self.exchange.charge_flooding(graph, rounds)?;
                let t = min_max(&theta_bar).0;
                (vec![t; m], vec![t; m], vec![t; m], self.diam.clone())
            }
            StepsizeCoupling::Decentralized => {
                self.exchange.scalar_round(graph, 1)?;
                let theta: Vec<f64> = (0..m)
                    .map(|i| neighborhood_min(graph, i, &theta_bar))
                    .collect();

                // auxiliary and dual stepsizes; neighbors send (θ_j^k, θ̃_j^{k-1})
                self.exchange.scalar_round(graph, 2)?;
                let mut theta_tilde = vec![0.0; m];
                let mut pi = vec![0.0; m];
                for i in 0..m {
                    let d = self.diam[i];
                    theta_tilde[i] = if k % d == 1 % d {
                        neighborhood_min(graph, i, &theta)
                    } else {
                        // γ·min equals min of γ-scaled values exactly
                        gamma * neighborhood_min(graph, i, &self.theta_tilde)
                    };
                    pi[i] = if k.is_multiple_of(d) {
                        theta_tilde[i]
                    } else {
                        gamma * self.pi[i]
                    };
                }

                // diameter estimates; neighbors send (θ̃_j^k, d_j^k)
                self.exchange.scalar_round(graph, 2)?;
                let mut diam_next = vec![0; m];
                for i in 0..m {
                    let d = self.diam[i];
                    let widest = graph
                        .neighborhood(i)
                        .iter()
                        .map(|&j| self.diam[j])
                        .max()
                        .expect("neighborhoods are never empty");
                    let unsettled = theta_tilde[i] != neighborhood_min(graph, i, &theta_tilde);
                    diam_next[i] = if k.is_multiple_of(d) && unsettled {
                        failed_tests.push(i);
                        2 * widest
                    } else {
                        widest
                    };
                }
                (theta, theta_tilde, pi, diam_next)
            }
        };

        // primal-dual update
        let (x_next, y_next) = local_update(&mut self.exchange, gm, &self.x, &half, &theta, &pi)?;
        guard_divergence(&x_next, k)?;

        self.x = x_next;
        self.y = y_next;
        self.theta = theta;
        self.theta_tilde = theta_tilde;
        self.pi = pi;
        self.diam = diam_next;
        self.last = Some(AdaptiveStepRecord {
            iteration: k,
            theta_bar,
            growth,
            failed_tests,
        });
        self.k += 1;
        Ok(())
    }
}

fn neighborhood_min(graph: &Graph, i: usize, v: &[f64]) -> f64 {
    graph
        .neighborhood(i)
        .iter()
        .map(|&j| v[j])
        .fold(f64::INFINITY, f64::min)
}

/// One iteration of the fully decentralized method.
pub fn adaptive_step(
    state: &mut AdaptiveState,
    gm: &GossipMatrix,
    family: &LossFamily,
) -> Result<(), AlgorithmError> {
    state.step(gm, family)
}

impl DecentralizedMethod for AdaptiveState {
    fn step(&mut self, gm: &GossipMatrix, family: &LossFamily) -> Result<(), AlgorithmError> {
        AdaptiveState::step(self, gm, family)
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
        let (pi_min, pi_max) = min_max(&self.pi);
        StepsizeSummary {
            theta_min,
            theta_max,
            pi_min: Some(pi_min),
            pi_max: Some(pi_max),
            d_max: self.diam.iter().copied().max(),
        }
    }

    fn merit_stepsize(&self) -> Option<f64> {
        Some(min_max(&self.theta).0)
    }

    fn vector_rounds_per_iteration(&self) -> u64 {
        3
    }
}
