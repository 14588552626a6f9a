use super::{run_problem, AlgorithmSpec, HarnessError, Problem, RunOptions, RunStatus, RunTrace};

/// `10^(-6 + i/4)` for `i = 0..=24`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=24).map(|i| 10f64.powf(-6.0 + i as f64 / 4.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneAttempt {
    pub alpha: f64,
    pub status: RunStatus,
    pub vector_rounds: u64,
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub alpha: f64,
    pub trace: RunTrace,
    /// Every grid point in the order tried (largest first).
    pub attempts: Vec<TuneAttempt>,
}

/// Grid search for the EXTRA stepsize with the fewest vector rounds to
/// target; ties go to the smaller `α`. Points are tried from the largest
/// down and each run's budget is capped at the best count found so far, so
/// later attempts that report `budget_exhausted` could not have won.
pub fn tune_extra(
    problem: &Problem,
    spec: &AlgorithmSpec,
    opts: &RunOptions,
    grid: &[f64],
) -> Result<TuneOutcome, HarnessError> {
    if grid.is_empty() {
        return Err(HarnessError::Config("empty EXTRA stepsize grid".into()));
    }
    if let Some(bad) = grid.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(HarnessError::Config(format!("EXTRA stepsize {bad} is not positive")));
    }
    let mut alphas = grid.to_vec();
    alphas.sort_by(|a, b| b.total_cmp(a));
    alphas.dedup();

    let mut best: Option<(u64, f64, RunTrace)> = None;
    let mut attempts = Vec::with_capacity(alphas.len());
    for alpha in alphas {
        let mut capped = *opts;
        if let Some((rounds, _, _)) = &best {
            capped.max_vector_rounds = capped.max_vector_rounds.min(*rounds);
        }
        let trace = run_problem(problem, spec, &capped, Some(alpha))?;
        attempts.push(TuneAttempt {
            alpha,
            status: trace.status,
            vector_rounds: trace.vector_rounds(),
        });
        if let Some(rounds) = trace.rounds_to_target() {
            if best.as_ref().is_none_or(|(r, _, _)| rounds <= *r) {
                best = Some((rounds, alpha, trace));
            }
        }
    }
    match best {
        Some((_, alpha, trace)) => Ok(TuneOutcome {
            alpha,
            trace,
            attempts,
        }),
        None => Err(HarnessError::Tuning(attempts)),
    }
}
