use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use super::{tune_extra, AlgorithmKind, AlgorithmSpec, HarnessError, Problem, ProblemClass, ProblemSpec, RunConfig};
use crate::algorithms::{
    AdaptiveParams, AdaptiveState, AlgorithmError, BaselineParams, BaselineState, DecentralizedMethod,
    ExtraState, MinConsensusMode, StepsizeCoupling,
};
use crate::metrics::{merit_cvx, merit_sc, ErgodicAverage};

/// Stopping rule and budgets of a single run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub tolerance: f64,
    pub max_iterations: u64,
    pub max_vector_rounds: u64,
    pub stride: u64,
    pub x0: f64,
}

impl RunOptions {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            tolerance: cfg.tolerance,
            max_iterations: cfg.max_iterations,
            max_vector_rounds: cfg.max_vector_rounds,
            stride: cfg.stride,
            x0: cfg.x0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    BudgetExhausted,
    Diverged,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::BudgetExhausted => "budget_exhausted",
            RunStatus::Diverged => "diverged",
        }
    }
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Diagnostics recorded at one iterate `X^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeritRow {
    pub k: u64,
    pub vector_rounds: u64,
    pub scalar_rounds: u64,
    /// `‖X^k - X★‖ / ‖X^0 - X★‖` (absolute when `X^0 = X★`).
    pub err_rel: f64,
    pub v: Option<f64>,
    pub m_erg: Option<f64>,
    pub theta_min: f64,
    pub theta_max: f64,
    pub pi_min: Option<f64>,
    pub pi_max: Option<f64>,
    pub d_max: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub algorithm: AlgorithmKind,
    /// EXTRA stepsize, if applicable.
    pub alpha: Option<f64>,
    /// `#` lines written above the CSV header.
    pub comments: Vec<String>,
    pub rows: Vec<MeritRow>,
    pub status: RunStatus,
    /// Error message when the run diverged.
    pub note: Option<String>,
    pub wall_clock: Duration,
    pub final_iterate: DMatrix<f64>,
}

impl RunTrace {
    pub fn last(&self) -> &MeritRow {
        self.rows.last().expect("traces always hold the initial row")
    }

    pub fn iterations(&self) -> u64 {
        self.last().k
    }

    pub fn vector_rounds(&self) -> u64 {
        self.last().vector_rounds
    }

    /// Vector rounds needed to reach the target, if the run converged.
    pub fn rounds_to_target(&self) -> Option<u64> {
        (self.status == RunStatus::Converged).then(|| self.vector_rounds())
    }
}

pub(crate) fn build_method(
    spec: &AlgorithmSpec,
    x0: DMatrix<f64>,
    alpha: Option<f64>,
) -> Result<Box<dyn DecentralizedMethod>, HarnessError> {
    let method: Box<dyn DecentralizedMethod> = match spec.name {
        AlgorithmKind::Adaptive => {
            let params = AdaptiveParams {
                delta: spec.delta,
                gamma: spec.gamma,
                coupling: StepsizeCoupling::Decentralized,
                safeguard_radius: spec.safeguard_radius(),
            };
            Box::new(AdaptiveState::new(x0, spec.theta0, spec.d0, params)?)
        }
        AlgorithmKind::NipsGlobal | AlgorithmKind::NipsLocal => {
            let mode = if spec.name == AlgorithmKind::NipsGlobal {
                MinConsensusMode::Global
            } else {
                MinConsensusMode::Local
            };
            let params = BaselineParams {
                delta: spec.delta,
                gamma: spec.gamma,
                mode,
            };
            Box::new(BaselineState::new(x0, spec.theta0, params)?)
        }
        AlgorithmKind::Extra => {
            let alpha = alpha.or(spec.extra_alpha).ok_or_else(|| {
                HarnessError::Config("extra needs extra_alpha (or run tune-extra)".into())
            })?;
            Box::new(ExtraState::new(x0, alpha)?)
        }
    };
    Ok(method)
}

struct Recorder<'a> {
    problem: &'a Problem,
    denom: f64,
    average: ErgodicAverage,
}

impl Recorder<'_> {
    fn row(&mut self, method: &dyn DecentralizedMethod) -> Result<MeritRow, HarnessError> {
        let p = self.problem;
        let x = method.primal();
        let k = method.iteration();
        let err_rel = (x - &p.fixed_point.x).norm() / self.denom;
        let v = match (p.class, method.dual(), method.merit_stepsize()) {
            (ProblemClass::StronglyConvex, Some(y), Some(theta)) => {
                Some(merit_sc(x, y, theta, &p.fixed_point, &p.merit_matrix))
            }
            _ => None,
        };
        let m_erg = if p.class == ProblemClass::Convex && k > 0 {
            self.average.push(x);
            let mean = self.average.mean()?;
            Some(merit_cvx(mean, &p.fixed_point, &p.gm, 1.0, &p.family)?)
        } else {
            None
        };
        let comm = method.comm();
        let s = method.stepsizes();
        Ok(MeritRow {
            k,
            vector_rounds: comm.vector_rounds,
            scalar_rounds: comm.scalar_rounds,
            err_rel,
            v,
            m_erg,
            theta_min: s.theta_min,
            theta_max: s.theta_max,
            pi_min: s.pi_min,
            pi_max: s.pi_max,
            d_max: s.d_max,
        })
    }
}

/// Runs one algorithm on an instantiated problem until the target, the
/// budget or divergence. `alpha` overrides the configured EXTRA stepsize.
pub fn run_problem(
    problem: &Problem,
    spec: &AlgorithmSpec,
    opts: &RunOptions,
    alpha: Option<f64>,
) -> Result<RunTrace, HarnessError> {
    if opts.stride == 0 {
        return Err(HarnessError::Config("stride must be >= 1".into()));
    }
    let start = Instant::now();
    let x0 = DMatrix::from_element(problem.agents(), problem.dim(), opts.x0);
    let denom = match (&x0 - &problem.fixed_point.x).norm() {
        d if d > 0.0 => d,
        _ => 1.0,
    };
    let mut method = build_method(spec, x0, alpha)?;
    let per_iteration = method.vector_rounds_per_iteration();
    let mut recorder = Recorder {
        problem,
        denom,
        average: ErgodicAverage::new(problem.agents(), problem.dim()),
    };
    let mut rows = Vec::new();
    let mut note = None;
    let status = loop {
        let row = recorder.row(method.as_ref())?;
        let converged = match problem.class {
            ProblemClass::StronglyConvex => row.err_rel <= opts.tolerance,
            ProblemClass::Convex => row.m_erg.is_some_and(|m| m <= opts.tolerance),
        };
        let exhausted = row.k >= opts.max_iterations || row.vector_rounds + per_iteration > opts.max_vector_rounds;
        let done = converged || exhausted;
        if done || row.k % opts.stride == 0 {
            rows.push(row.clone());
        }
        if converged {
            break RunStatus::Converged;
        }
        if exhausted {
            break RunStatus::BudgetExhausted;
        }
        match method.step(&problem.gm, &problem.family) {
            Ok(()) => {}
            Err(e @ AlgorithmError::Diverged { .. }) => {
                if rows.last().map(|r| r.k) != Some(row.k) {
                    rows.push(row);
                }
                note = Some(e.to_string());
                break RunStatus::Diverged;
            }
            Err(e) => return Err(e.into()),
        }
    };
    let alpha = (spec.name == AlgorithmKind::Extra).then(|| method.stepsizes().theta_min);
    let mut comments = vec![format!("algorithm={}", spec.name.name())];
    if let Some(a) = alpha {
        comments.push(format!("extra_alpha={a:?}"));
    }
    Ok(RunTrace {
        algorithm: spec.name,
        alpha,
        comments,
        rows,
        status,
        note,
        wall_clock: start.elapsed(),
        final_iterate: method.primal().clone(),
    })
}

/// Seeds and problem parameters recorded in CSV comment lines.
pub fn describe_config(cfg: &RunConfig) -> Vec<String> {
    let graph = match cfg.graph {
        crate::topology::GraphSpec::ErdosRenyi { seed, .. } => {
            format!("graph={} graph_seed={seed}", cfg.graph.label())
        }
        _ => format!("graph={}", cfg.graph.label()),
    };
    let problem = match &cfg.problem {
        ProblemSpec::Quadratic { h, n, lambda, seed } => {
            format!("problem=quadratic h={h} n={n} lambda={lambda:?} problem_seed={seed}")
        }
        ProblemSpec::Logistic { path, h, seed } => {
            let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            format!("problem=logistic data={name} h={h} partition_seed={seed}")
        }
    };
    vec![
        graph,
        problem,
        format!("c={:?} tolerance={:?}", cfg.c, cfg.tolerance),
    ]
}

/// Instantiates and runs a configuration. EXTRA without a fixed
/// `extra_alpha` is tuned over its grid first.
pub fn run(cfg: &RunConfig) -> Result<RunTrace, HarnessError> {
    cfg.validate()?;
    let problem = Problem::from_config(cfg)?;
    run_with_problem(cfg, &problem)
}

pub(crate) fn run_with_problem(cfg: &RunConfig, problem: &Problem) -> Result<RunTrace, HarnessError> {
    let opts = RunOptions::from_config(cfg);
    let mut trace = if cfg.algorithm.name == AlgorithmKind::Extra && cfg.algorithm.extra_alpha.is_none() {
        let grid = cfg.algorithm.extra_alpha_grid.clone().unwrap_or_else(super::default_alpha_grid);
        tune_extra(problem, &cfg.algorithm, &opts, &grid)?.trace
    } else {
        run_problem(problem, &cfg.algorithm, &opts, None)?
    };
    let mut comments = describe_config(cfg);
    comments.append(&mut trace.comments);
    trace.comments = comments;
    Ok(trace)
}
