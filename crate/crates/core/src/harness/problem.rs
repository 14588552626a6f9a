use std::path::Path;

use nalgebra::DMatrix;

use super::{HarnessError, ProblemSpec, RunConfig};
use crate::losses::{generate_quadratic, parse_libsvm, partition_logistic, LossFamily};
use crate::metrics::{fixed_point, FixedPoint};
use crate::topology::{spectral_data, GossipMatrix, GraphSpec};

/// Which stopping rule and merit apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemClass {
    /// Stop on relative distance to `X★`; trace `V`.
    StronglyConvex,
    /// Stop on `ℳ` at the ergodic average; trace `ℳ(X̂^k)`.
    Convex,
}

/// A fully instantiated problem: losses, network and reference solution.
#[derive(Debug, Clone)]
pub struct Problem {
    pub family: LossFamily,
    pub gm: GossipMatrix,
    pub fixed_point: FixedPoint,
    pub merit_matrix: DMatrix<f64>,
    pub class: ProblemClass,
}

impl Problem {
    pub fn new(
        family: LossFamily,
        gm: GossipMatrix,
        class: ProblemClass,
        oracle_tol: f64,
    ) -> Result<Self, HarnessError> {
        let fixed_point = fixed_point(&family, &gm, oracle_tol)?;
        let merit_matrix = spectral_data(&gm).merit_matrix;
        Ok(Self {
            family,
            gm,
            fixed_point,
            merit_matrix,
            class,
        })
    }

    /// Builds the graph, generates or loads the data and solves for `x★`.
    pub fn from_config(cfg: &RunConfig) -> Result<Self, HarnessError> {
        build(&cfg.graph, &cfg.problem, cfg.c, cfg.oracle_tol)
    }

    pub fn agents(&self) -> usize {
        self.family.agents()
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }
}

pub(crate) fn build(
    graph: &GraphSpec,
    problem: &ProblemSpec,
    c: f64,
    oracle_tol: f64,
) -> Result<Problem, HarnessError> {
    let graph = graph.build().map_err(|e| HarnessError::Config(e.to_string()))?;
    let m = graph.agents();
    let gm = GossipMatrix::metropolis(graph, c).map_err(|e| HarnessError::Config(e.to_string()))?;
    let (family, class) = match problem {
        ProblemSpec::Quadratic { h, n, lambda, seed } => (
            generate_quadratic(m, *h, *n, *lambda, *seed)?,
            ProblemClass::StronglyConvex,
        ),
        ProblemSpec::Logistic { path, h, seed } => {
            (load_logistic(path, m, *h, *seed)?, ProblemClass::Convex)
        }
    };
    Problem::new(family, gm, class, oracle_tol)
}

fn load_logistic(path: &Path, m: usize, h: usize, seed: u64) -> Result<LossFamily, HarnessError> {
    if !path.is_file() {
        return Err(HarnessError::MissingData(path.to_path_buf()));
    }
    let data = parse_libsvm(path)?;
    Ok(partition_logistic(&data, m, h, seed)?)
}
