use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use dadapt::harness::{
    default_alpha_grid, experiment_suite, save_trace, tune_extra, write_trace, AlgorithmKind, HarnessError,
    Problem, RunConfig, RunOptions, RunStatus, SuiteName, SuiteOptions,
};

const EXIT_CONVERGED: u8 = 0;
const EXIT_FAILURE: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_DIVERGED: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "dadapt", version, about = "Decentralized adaptive optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one configuration and write its trace CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Trace destination; overrides `output` in the config. Without
        /// either the CSV goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named experiment suite.
    Suite {
        name: String,
        #[arg(long)]
        out: PathBuf,
        /// libsvm data file for logistic_graphs.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        max_iterations: Option<u64>,
        #[arg(long)]
        max_vector_rounds: Option<u64>,
        /// Run members one at a time.
        #[arg(long)]
        sequential: bool,
    },
    /// Grid-search the EXTRA stepsize for a configuration.
    TuneExtra {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn status_code(status: RunStatus) -> u8 {
    match status {
        RunStatus::Converged => EXIT_CONVERGED,
        RunStatus::BudgetExhausted => EXIT_BUDGET,
        RunStatus::Diverged => EXIT_DIVERGED,
    }
}

fn emit(trace: &dadapt::harness::RunTrace, out: Option<PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            save_trace(trace, &path).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => write_trace(trace, std::io::stdout().lock())?,
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let trace = dadapt::harness::run(&cfg)?;
            emit(&trace, out.or(cfg.output.clone()))?;
            eprintln!(
                "{}: {} after {} iterations, {} vector rounds, err_rel {:e} ({:.2?})",
                cfg.algorithm.name.name(),
                trace.status,
                trace.iterations(),
                trace.vector_rounds(),
                trace.last().err_rel,
                trace.wall_clock
            );
            if let Some(note) = &trace.note {
                eprintln!("{note}");
            }
            Ok(status_code(trace.status))
        }
        Command::Suite {
            name,
            out,
            data,
            max_iterations,
            max_vector_rounds,
            sequential,
        } => {
            let name: SuiteName = name.parse()?;
            let opts = SuiteOptions {
                data,
                max_iterations,
                max_vector_rounds,
                alpha_grid: None,
                sequential,
            };
            let report = experiment_suite(name, &out, &opts)?;
            for r in &report.rows {
                eprintln!(
                    "{:<40} {:<17} {:>8} vector rounds",
                    r.run,
                    r.status.as_str(),
                    r.vector_rounds
                );
            }
            eprintln!("wrote {} traces and {}", report.traces.len(), report.summary_path.display());
            Ok(EXIT_CONVERGED)
        }
        Command::TuneExtra { config, out } => {
            let mut cfg = RunConfig::load(&config)?;
            cfg.algorithm.name = AlgorithmKind::Extra;
            let problem = Problem::from_config(&cfg)?;
            let grid = cfg.algorithm.extra_alpha_grid.clone().unwrap_or_else(default_alpha_grid);
            let outcome = tune_extra(&problem, &cfg.algorithm, &RunOptions::from_config(&cfg), &grid)?;
            for a in &outcome.attempts {
                eprintln!("alpha {:e}: {} ({} vector rounds)", a.alpha, a.status, a.vector_rounds);
            }
            println!("best_alpha = {:?}", outcome.alpha);
            println!("vector_rounds = {}", outcome.trace.vector_rounds());
            if let Some(path) = out.or(cfg.output.clone()) {
                let mut trace = outcome.trace;
                let mut comments = dadapt::harness::describe_config(&cfg);
                comments.append(&mut trace.comments);
                trace.comments = comments;
                emit(&trace, Some(path))?;
            }
            Ok(EXIT_CONVERGED)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e
                .downcast_ref::<HarnessError>()
                .is_some_and(HarnessError::is_config_error);
            ExitCode::from(if config { EXIT_CONFIG } else { EXIT_FAILURE })
        }
    }
}
