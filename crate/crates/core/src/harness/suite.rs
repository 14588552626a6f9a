use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use super::trace_csv::fmt_float;
use super::{
    describe_config, run_problem, save_trace, tune_extra, AlgorithmKind, AlgorithmSpec, HarnessError,
    Problem, ProblemSpec, RunConfig, RunOptions, RunStatus, RunTrace,
};
use crate::metrics::quadratic_conditioning;
use crate::topology::GraphSpec;

/// Seed of the synthetic quadratic data in every quadratic suite.
pub const QUADRATIC_SEED: u64 = 1;
/// Seed of the shuffle that splits the libsvm samples among agents.
pub const PARTITION_SEED: u64 = 0;
/// Base seeds of the two random graphs.
pub const SPARSE_GRAPH_SEED: u64 = 10;
pub const DENSE_GRAPH_SEED: u64 = 50;

pub const SUITE_AGENTS: usize = 20;
pub const CONDITION_LAMBDAS: [f64; 5] = [0.0, 0.5, 5.0, 50.0, 500.0];
pub const DIAMETER_AGENTS: [usize; 4] = [5, 10, 20, 40];
pub const LOGISTIC_SAMPLES_PER_AGENT: usize = 159;
pub const LOGISTIC_TOLERANCE: f64 = 1e-3;
pub const LOGISTIC_MAX_VECTOR_ROUNDS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteName {
    QuadraticGraphs,
    ConditionSweep,
    DiameterSweep,
    LogisticGraphs,
}

impl SuiteName {
    pub const ALL: [SuiteName; 4] = [
        SuiteName::QuadraticGraphs,
        SuiteName::ConditionSweep,
        SuiteName::DiameterSweep,
        SuiteName::LogisticGraphs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::QuadraticGraphs => "quadratic_graphs",
            SuiteName::ConditionSweep => "condition_sweep",
            SuiteName::DiameterSweep => "diameter_sweep",
            SuiteName::LogisticGraphs => "logistic_graphs",
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteName {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SuiteName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| HarnessError::UnknownSuite(s.to_string()))
    }
}

/// Overrides for a suite run. `None` keeps the suite's own setting.
#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    /// libsvm file for the logistic suite.
    pub data: Option<PathBuf>,
    pub max_iterations: Option<u64>,
    pub max_vector_rounds: Option<u64>,
    pub alpha_grid: Option<Vec<f64>>,
    /// Run members one after another instead of on the rayon pool.
    pub sequential: bool,
}

/// One line of a suite's `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub run: String,
    pub graph: String,
    pub algorithm: AlgorithmKind,
    pub lambda: Option<f64>,
    pub kappa: Option<f64>,
    pub agents: usize,
    pub diameter: usize,
    pub alpha: Option<f64>,
    pub status: RunStatus,
    pub iterations: u64,
    pub vector_rounds: u64,
    pub scalar_rounds: u64,
    pub rounds_to_target: Option<u64>,
    pub final_err_rel: f64,
    pub final_v: Option<f64>,
    pub final_m_erg: Option<f64>,
}

pub const SUMMARY_HEADER: [&str; 16] = [
    "run",
    "graph",
    "algorithm",
    "lambda",
    "kappa",
    "m",
    "diameter",
    "alpha",
    "status",
    "iterations",
    "vector_rounds",
    "scalar_rounds",
    "rounds_to_target",
    "final_err_rel",
    "final_V",
    "final_M_erg",
];

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: SuiteName,
    pub traces: Vec<PathBuf>,
    pub summary_path: PathBuf,
    pub rows: Vec<SummaryRow>,
}

/// A member run of a suite.
#[derive(Debug, Clone)]
pub struct SuiteMember {
    pub label: String,
    pub config: RunConfig,
}

fn suite_graphs(m: usize) -> [GraphSpec; 3] {
    [
        GraphSpec::Line { m },
        GraphSpec::ErdosRenyi {
            m,
            p: 0.1,
            seed: SPARSE_GRAPH_SEED,
        },
        GraphSpec::ErdosRenyi {
            m,
            p: 0.5,
            seed: DENSE_GRAPH_SEED,
        },
    ]
}

fn member(
    graph: &GraphSpec,
    problem: &ProblemSpec,
    kind: AlgorithmKind,
    suffix: &str,
    opts: &SuiteOptions,
) -> SuiteMember {
    let mut spec = AlgorithmSpec::new(kind);
    spec.extra_alpha_grid = opts.alpha_grid.clone();
    let mut config = RunConfig::new(graph.clone(), problem.clone(), spec);
    if let Some(n) = opts.max_iterations {
        config.max_iterations = n;
    }
    if let Some(n) = opts.max_vector_rounds {
        config.max_vector_rounds = n;
    }
    SuiteMember {
        label: format!("{}{suffix}_{}", graph.label(), kind.name()),
        config,
    }
}

/// Member runs of a suite, in summary order.
pub fn suite_members(name: SuiteName, opts: &SuiteOptions) -> Result<Vec<SuiteMember>, HarnessError> {
    let mut out = Vec::new();
    match name {
        SuiteName::QuadraticGraphs => {
            let problem = ProblemSpec::Quadratic {
                h: 110,
                n: 100,
                lambda: 0.0,
                seed: QUADRATIC_SEED,
            };
            for g in suite_graphs(SUITE_AGENTS) {
                for kind in AlgorithmKind::ALL {
                    out.push(member(&g, &problem, kind, "", opts));
                }
            }
        }
        SuiteName::ConditionSweep => {
            for g in suite_graphs(SUITE_AGENTS) {
                for lambda in CONDITION_LAMBDAS {
                    let problem = ProblemSpec::Quadratic {
                        h: 110,
                        n: 100,
                        lambda,
                        seed: QUADRATIC_SEED,
                    };
                    for kind in AlgorithmKind::ALL {
                        out.push(member(&g, &problem, kind, &format!("_lambda{lambda:?}"), opts));
                    }
                }
            }
        }
        SuiteName::DiameterSweep => {
            for m in DIAMETER_AGENTS {
                let problem = ProblemSpec::Quadratic {
                    h: 1,
                    n: 100,
                    lambda: 0.0,
                    seed: QUADRATIC_SEED,
                };
                for kind in AlgorithmKind::ALL {
                    out.push(member(&GraphSpec::Line { m }, &problem, kind, "", opts));
                }
            }
        }
        SuiteName::LogisticGraphs => {
            let path = opts
                .data
                .clone()
                .ok_or_else(|| HarnessError::Config("logistic_graphs needs --data <libsvm file>".into()))?;
            if !path.is_file() {
                return Err(HarnessError::MissingData(path));
            }
            let problem = ProblemSpec::Logistic {
                path,
                h: LOGISTIC_SAMPLES_PER_AGENT,
                seed: PARTITION_SEED,
            };
            for g in suite_graphs(SUITE_AGENTS) {
                for kind in AlgorithmKind::ALL {
                    let mut m = member(&g, &problem, kind, "", opts);
                    m.config.tolerance = LOGISTIC_TOLERANCE;
                    if opts.max_vector_rounds.is_none() {
                        m.config.max_vector_rounds = LOGISTIC_MAX_VECTOR_ROUNDS;
                    }
                    out.push(m);
                }
            }
        }
    }
    Ok(out)
}

/// EXTRA in a suite: tuned over the grid; if no grid point reaches the
/// target, the largest stepsize that did not diverge is run on the full
/// budget so the comparison still has a curve.
fn run_member(cfg: &RunConfig, problem: &Problem) -> Result<RunTrace, HarnessError> {
    let opts = RunOptions::from_config(cfg);
    if cfg.algorithm.name != AlgorithmKind::Extra {
        return run_problem(problem, &cfg.algorithm, &opts, None);
    }
    let grid = cfg.algorithm.extra_alpha_grid.clone().unwrap_or_else(super::default_alpha_grid);
    match tune_extra(problem, &cfg.algorithm, &opts, &grid) {
        Ok(out) => Ok(out.trace),
        Err(HarnessError::Tuning(attempts)) => {
            let stable = attempts.iter().find(|a| a.status != RunStatus::Diverged);
            let alpha = stable.map_or_else(
                || grid.iter().copied().fold(f64::INFINITY, f64::min),
                |a| a.alpha,
            );
            run_problem(problem, &cfg.algorithm, &opts, Some(alpha))
        }
        Err(e) => Err(e),
    }
}

fn problem_key(cfg: &RunConfig) -> String {
    format!("{:?}|{:?}|{}", cfg.graph, cfg.problem, cfg.c)
}

/// Runs every member of a suite, writes one trace CSV per member plus
/// `summary.csv` into `out_dir`.
pub fn experiment_suite(name: SuiteName, out_dir: &Path, opts: &SuiteOptions) -> Result<SuiteReport, HarnessError> {
    let members = suite_members(name, opts)?;
    std::fs::create_dir_all(out_dir)?;

    let mut keys: Vec<String> = Vec::new();
    let mut key_of = Vec::with_capacity(members.len());
    for m in &members {
        let key = problem_key(&m.config);
        let idx = keys.iter().position(|k| *k == key).unwrap_or_else(|| {
            keys.push(key);
            keys.len() - 1
        });
        key_of.push(idx);
    }
    let firsts: Vec<&RunConfig> = (0..keys.len())
        .map(|k| &members[key_of.iter().position(|&i| i == k).expect("every key has a member")].config)
        .collect();
    let build = |cfg: &&RunConfig| Problem::from_config(cfg);
    let problems: Vec<Problem> = if opts.sequential {
        firsts.iter().map(build).collect::<Result<_, _>>()?
    } else {
        firsts.par_iter().map(build).collect::<Result<_, _>>()?
    };

    let execute = |(i, m): (usize, &SuiteMember)| -> Result<(PathBuf, SummaryRow), HarnessError> {
        let problem = &problems[key_of[i]];
        let mut trace = run_member(&m.config, problem)?;
        let mut comments = vec![format!("suite={name} run={}", m.label)];
        comments.extend(describe_config(&m.config));
        comments.append(&mut trace.comments);
        trace.comments = comments;
        let path = out_dir.join(format!("{}.csv", m.label));
        save_trace(&trace, &path)?;
        Ok((path, summarize(m, problem, &trace)?))
    };
    let results: Vec<(PathBuf, SummaryRow)> = if opts.sequential {
        members.iter().enumerate().map(execute).collect::<Result<_, _>>()?
    } else {
        members.par_iter().enumerate().map(execute).collect::<Result<_, _>>()?
    };
    let (traces, rows): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    let summary_path = out_dir.join("summary.csv");
    write_summary(name, &rows, BufWriter::new(File::create(&summary_path)?))?;
    Ok(SuiteReport {
        name,
        traces,
        summary_path,
        rows,
    })
}

fn summarize(m: &SuiteMember, problem: &Problem, trace: &RunTrace) -> Result<SummaryRow, HarnessError> {
    let last = trace.last();
    let (lambda, kappa) = match m.config.problem {
        ProblemSpec::Quadratic { lambda, .. } => {
            (Some(lambda), quadratic_conditioning(&problem.family).map(|c| c.kappa()))
        }
        ProblemSpec::Logistic { .. } => (None, None),
    };
    let diameter = problem
        .gm
        .graph()
        .diameter()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(SummaryRow {
        run: m.label.clone(),
        graph: m.config.graph.label(),
        algorithm: m.config.algorithm.name,
        lambda,
        kappa,
        agents: problem.agents(),
        diameter,
        alpha: trace.alpha,
        status: trace.status,
        iterations: last.k,
        vector_rounds: last.vector_rounds,
        scalar_rounds: last.scalar_rounds,
        rounds_to_target: trace.rounds_to_target(),
        final_err_rel: last.err_rel,
        final_v: last.v,
        final_m_erg: last.m_erg,
    })
}

pub fn write_summary<W: Write>(name: SuiteName, rows: &[SummaryRow], mut out: W) -> Result<(), HarnessError> {
    writeln!(out, "# suite={name}")?;
    writeln!(
        out,
        "# quadratic_seed={QUADRATIC_SEED} partition_seed={PARTITION_SEED} sparse_graph_seed={SPARSE_GRAPH_SEED} dense_graph_seed={DENSE_GRAPH_SEED}"
    )?;
    let opt = |x: Option<f64>| x.map(fmt_float).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.run.clone(),
            r.graph.clone(),
            r.algorithm.name().to_string(),
            opt(r.lambda),
            opt(r.kappa),
            r.agents.to_string(),
            r.diameter.to_string(),
            opt(r.alpha),
            r.status.as_str().to_string(),
            r.iterations.to_string(),
            r.vector_rounds.to_string(),
            r.scalar_rounds.to_string(),
            r.rounds_to_target.map(|x| x.to_string()).unwrap_or_default(),
            fmt_float(r.final_err_rel),
            opt(r.final_v),
            opt(r.final_m_erg),
        ])?;
    }
    w.flush()?;
    Ok(())
}
