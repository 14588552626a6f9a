use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dadapt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dadapt")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"
[graph]
kind = "cycle"
m = 6

[problem]
kind = "quadratic"
h = 8
n = 4
lambda = 0.1
seed = 3
"#;

fn with_algorithm(extra: &str, algorithm: &str) -> String {
    format!("{extra}{SMALL}\n[algorithm]\n{algorithm}\n")
}

#[test]
fn run_writes_csv_to_stdout_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ok.toml", &with_algorithm("", "name = \"adaptive\""));
    let out = dadapt(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut data = stdout.lines().filter(|l| !l.starts_with('#'));
    assert!(data.next().unwrap().starts_with("k,vector_rounds,scalar_rounds,err_rel"));
    assert!(stdout.trim_end().ends_with(",converged"));
}

#[test]
fn run_to_file_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ok.toml", &with_algorithm("stride = 5\n", "name = \"nips_local\""));
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let res = dadapt(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let budget = write_config(
        dir.path(),
        "budget.toml",
        &with_algorithm("max_vector_rounds = 30\n", "name = \"adaptive\""),
    );
    assert_eq!(dadapt(&["run", "--config", budget.to_str().unwrap()]).status.code(), Some(2));

    let diverge = write_config(
        dir.path(),
        "diverge.toml",
        &with_algorithm("", "name = \"extra\"\nextra_alpha = 1000.0"),
    );
    assert_eq!(dadapt(&["run", "--config", diverge.to_str().unwrap()]).status.code(), Some(4));

    let bad = write_config(dir.path(), "bad.toml", &with_algorithm("c = 0.9\n", "name = \"adaptive\""));
    assert_eq!(dadapt(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(3));

    let unknown_key = write_config(dir.path(), "typo.toml", &with_algorithm("tolerence = 1e-3\n", "name = \"adaptive\""));
    assert_eq!(dadapt(&["run", "--config", unknown_key.to_str().unwrap()]).status.code(), Some(3));

    let missing = dir.path().join("nope.toml");
    assert_eq!(dadapt(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(3));

    let out = dir.path().join("suite");
    assert_eq!(dadapt(&["suite", "fig9", "--out", out.to_str().unwrap()]).status.code(), Some(3));
    let res = dadapt(&[
        "suite",
        "logistic_graphs",
        "--out",
        out.to_str().unwrap(),
        "--data",
        dir.path().join("a3a").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn tune_extra_reports_the_best_stepsize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "tune.toml",
        &with_algorithm("", "name = \"extra\"\nextra_alpha_grid = [0.001, 0.01, 0.1, 1.0, 10.0]"),
    );
    let csv = dir.path().join("best.csv");
    let out = dadapt(&["tune-extra", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("best_alpha = "));
    assert!(stdout.contains("vector_rounds = "));
    assert!(std::fs::read_to_string(csv).unwrap().contains("converged"));
}
