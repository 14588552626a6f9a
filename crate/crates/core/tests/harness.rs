mod support;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use dadapt::harness::{
    run, suite_members, tune_extra, write_trace, AlgorithmKind, AlgorithmSpec, HarnessError, Problem,
    ProblemClass, ProblemSpec, RunConfig, RunOptions, RunStatus, SuiteName, SuiteOptions, CONDITION_LAMBDAS,
    DENSE_GRAPH_SEED, QUADRATIC_SEED, SPARSE_GRAPH_SEED,
};
use dadapt::losses::generate_quadratic;
use dadapt::topology::{GossipMatrix, Graph, GraphSpec};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn csv_bytes(cfg: &RunConfig) -> Vec<u8> {
    let mut out = Vec::new();
    write_trace(&run(cfg).unwrap(), &mut out).unwrap();
    out
}

#[test]
fn shipped_configs_parse_and_round_trip() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "toml") {
            continue;
        }
        let cfg = RunConfig::load(&path).unwrap();
        let again = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again, "{}", path.display());
        seen += 1;
    }
    assert_eq!(seen, 4);
}

#[test]
fn shipped_quadratic_configs_converge() {
    for name in ["quadratic_er05_adaptive", "condition_lambda5_extra", "diameter_line10_nips_local"] {
        let cfg = RunConfig::load(configs_dir().join(format!("{name}.toml"))).unwrap();
        let trace = run(&cfg).unwrap();
        assert_eq!(trace.status, RunStatus::Converged, "{name}");
        assert!(trace.last().err_rel <= cfg.tolerance);
    }
}

#[test]
fn logistic_config_resolves_data_relative_to_the_file() {
    let cfg = RunConfig::load(configs_dir().join("logistic_er05_adaptive.toml")).unwrap();
    let ProblemSpec::Logistic { path, .. } = &cfg.problem else { panic!("not logistic") };
    assert!(path.ends_with("configs/../data/a3a"));
    assert_eq!(cfg.algorithm.safeguard_radius(), Some(1e6));
}

#[test]
fn runs_are_deterministic_and_rows_increase() {
    let mut cfg = RunConfig::new(
        GraphSpec::ErdosRenyi { m: 12, p: 0.3, seed: 4 },
        ProblemSpec::Quadratic { h: 20, n: 10, lambda: 0.1, seed: 9 },
        AlgorithmSpec::new(AlgorithmKind::Adaptive),
    );
    cfg.stride = 3;
    let a = csv_bytes(&cfg);
    assert_eq!(a, csv_bytes(&cfg));

    let trace = run(&cfg).unwrap();
    for w in trace.rows.windows(2) {
        assert!(w[1].k > w[0].k);
        assert!(w[1].vector_rounds > w[0].vector_rounds);
    }
}

#[test]
fn absurd_extra_stepsize_is_recorded_as_divergence() {
    let mut spec = AlgorithmSpec::new(AlgorithmKind::Extra);
    spec.extra_alpha = Some(1e3);
    let cfg = RunConfig::new(
        GraphSpec::Line { m: 20 },
        ProblemSpec::Quadratic { h: 110, n: 100, lambda: 0.0, seed: QUADRATIC_SEED },
        spec,
    );
    let trace = run(&cfg).unwrap();
    assert_eq!(trace.status, RunStatus::Diverged);
    assert!(trace.note.is_some());
}

#[test]
fn suite_member_counts() {
    let opts = SuiteOptions::default();
    assert_eq!(suite_members(SuiteName::QuadraticGraphs, &opts).unwrap().len(), 12);
    assert_eq!(suite_members(SuiteName::ConditionSweep, &opts).unwrap().len(), 60);

    let diameter = suite_members(SuiteName::DiameterSweep, &opts).unwrap();
    let agents: BTreeSet<usize> = diameter.iter().map(|m| m.config.graph.agents()).collect();
    assert_eq!(agents.into_iter().collect::<Vec<_>>(), vec![5, 10, 20, 40]);
    let pairs: BTreeSet<(usize, &str)> = diameter
        .iter()
        .map(|m| (m.config.graph.agents(), m.config.algorithm.name.name()))
        .collect();
    assert_eq!(pairs.len(), diameter.len());
}

#[test]
fn logistic_suite_needs_existing_data() {
    let err = suite_members(SuiteName::LogisticGraphs, &SuiteOptions::default()).unwrap_err();
    assert!(err.is_config_error());
    let opts = SuiteOptions {
        data: Some("/nonexistent/a3a".into()),
        ..SuiteOptions::default()
    };
    assert!(matches!(
        suite_members(SuiteName::LogisticGraphs, &opts),
        Err(HarnessError::MissingData(_))
    ));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a3a");
    std::fs::write(&path, support::one_hot_libsvm(3185, 2)).unwrap();
    let opts = SuiteOptions {
        data: Some(path),
        ..SuiteOptions::default()
    };
    let members = suite_members(SuiteName::LogisticGraphs, &opts).unwrap();
    assert_eq!(members.len(), 12);
    assert!(members.iter().all(|m| m.config.tolerance == 1e-3));
}

/// Tuned EXTRA should not get markedly faster as the problem gets worse
/// conditioned: between adjacent condition numbers the rounds to target
/// may drop by at most a factor of two.
#[test]
fn tuned_extra_condition_trend() {
    for (p, seed) in [(0.5, DENSE_GRAPH_SEED), (0.1, SPARSE_GRAPH_SEED)] {
        let mut by_kappa = Vec::new();
        for lambda in CONDITION_LAMBDAS {
            let fam = generate_quadratic(20, 110, 100, lambda, QUADRATIC_SEED).unwrap();
            let kappa = dadapt::metrics::quadratic_conditioning(&fam).unwrap().kappa();
            let gm = GossipMatrix::metropolis(Graph::erdos_renyi(20, p, seed).unwrap(), 0.5).unwrap();
            let problem = Problem::new(fam, gm, ProblemClass::StronglyConvex, 1e-8).unwrap();
            let opts = RunOptions {
                tolerance: 1e-5,
                max_iterations: 50_000,
                max_vector_rounds: 50_000,
                stride: 1,
                x0: 0.0,
            };
            let grid = dadapt::harness::default_alpha_grid();
            let out = tune_extra(&problem, &AlgorithmSpec::new(AlgorithmKind::Extra), &opts, &grid).unwrap();
            by_kappa.push((kappa, out.trace.vector_rounds()));
        }
        by_kappa.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in by_kappa.windows(2) {
            assert!(2 * w[1].1 >= w[0].1, "p={p}: {by_kappa:?}");
        }
    }
}
