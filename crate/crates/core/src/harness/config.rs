use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::algorithms::GammaSchedule;
use crate::topology::GraphSpec;

pub const DEFAULT_MAX_ITERATIONS: u64 = 50_000;
pub const DEFAULT_MAX_VECTOR_ROUNDS: u64 = 200_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-5;
pub const DEFAULT_ORACLE_TOL: f64 = 1e-8;

/// One experiment run, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: GraphSpec,
    pub problem: ProblemSpec,
    pub algorithm: AlgorithmSpec,
    /// Laziness `c` of `W = (1 - c) I + c W̃`.
    #[serde(default = "default_c")]
    pub c: f64,
    /// Target for `‖X^k - X★‖/‖X^0 - X★‖` (quadratic problems) or
    /// `ℳ(X̂^k)` (logistic problems).
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: u64,
    #[serde(default = "default_max_vector_rounds")]
    pub max_vector_rounds: u64,
    /// Emit a trace row every `stride` iterations (the last row is always kept).
    #[serde(default = "default_stride")]
    pub stride: u64,
    /// Every entry of `X^0`.
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "default_oracle_tol")]
    pub oracle_tol: f64,
    /// Trace CSV destination; relative paths resolve against the config file.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `f_i(x) = ‖A_i x - b_i‖² + λ/2 ‖x‖²` with standard normal `A_i` (h×n), `b_i`.
    Quadratic {
        h: usize,
        n: usize,
        #[serde(default)]
        lambda: f64,
        seed: u64,
    },
    /// Logistic regression on a libsvm file, `h` samples per agent.
    Logistic { path: PathBuf, h: usize, seed: u64 },
}

impl ProblemSpec {
    pub fn seed(&self) -> u64 {
        match *self {
            ProblemSpec::Quadratic { seed, .. } | ProblemSpec::Logistic { seed, .. } => seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Adaptive,
    NipsGlobal,
    NipsLocal,
    Extra,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 4] = [
        AlgorithmKind::Adaptive,
        AlgorithmKind::NipsGlobal,
        AlgorithmKind::NipsLocal,
        AlgorithmKind::Extra,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Adaptive => "adaptive",
            AlgorithmKind::NipsGlobal => "nips_global",
            AlgorithmKind::NipsLocal => "nips_local",
            AlgorithmKind::Extra => "extra",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafeguardSpec {
    pub enabled: bool,
    #[serde(rename = "R_tilde")]
    pub r_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub name: AlgorithmKind,
    #[serde(default = "default_one")]
    pub delta: f64,
    #[serde(default = "default_one")]
    pub theta0: f64,
    #[serde(default = "default_d0")]
    pub d0: u64,
    #[serde(default)]
    pub gamma: GammaSchedule,
    #[serde(default)]
    pub safeguard: Option<SafeguardSpec>,
    #[serde(default)]
    pub extra_alpha: Option<f64>,
    #[serde(default)]
    pub extra_alpha_grid: Option<Vec<f64>>,
}

impl AlgorithmSpec {
    pub fn new(name: AlgorithmKind) -> Self {
        Self {
            name,
            delta: 1.0,
            theta0: 1.0,
            d0: 1,
            gamma: GammaSchedule::default(),
            safeguard: None,
            extra_alpha: None,
            extra_alpha_grid: None,
        }
    }

    /// `R̃` when the safeguard is switched on.
    pub fn safeguard_radius(&self) -> Option<f64> {
        self.safeguard.filter(|s| s.enabled).map(|s| s.r_tilde)
    }
}

fn default_c() -> f64 {
    0.5
}
fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}
fn default_max_iterations() -> u64 {
    DEFAULT_MAX_ITERATIONS
}
fn default_max_vector_rounds() -> u64 {
    DEFAULT_MAX_VECTOR_ROUNDS
}
fn default_stride() -> u64 {
    1
}
fn default_oracle_tol() -> f64 {
    DEFAULT_ORACLE_TOL
}
fn default_one() -> f64 {
    1.0
}
fn default_d0() -> u64 {
    1
}

impl RunConfig {
    pub fn new(graph: GraphSpec, problem: ProblemSpec, algorithm: AlgorithmSpec) -> Self {
        Self {
            graph,
            problem,
            algorithm,
            c: default_c(),
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            max_vector_rounds: DEFAULT_MAX_VECTOR_ROUNDS,
            stride: 1,
            x0: 0.0,
            oracle_tol: DEFAULT_ORACLE_TOL,
            output: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative data and output paths are resolved
    /// against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let ProblemSpec::Logistic { path: data, .. } = &mut cfg.problem {
            if data.is_relative() {
                *data = base.join(&*data);
            }
        }
        if let Some(out) = &mut cfg.output {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configs always serialize")
    }

    /// Range checks that do not need to touch the file system.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.graph.agents() == 0 {
            return bad("graph needs at least one agent".into());
        }
        if !(self.c > 0.0 && self.c <= 0.5) {
            return bad(format!("c must lie in (0, 1/2], got {}", self.c));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if !(self.oracle_tol > 0.0 && self.oracle_tol.is_finite()) {
            return bad(format!("oracle_tol must be positive, got {}", self.oracle_tol));
        }
        if self.stride == 0 {
            return bad("stride must be >= 1".into());
        }
        if !self.x0.is_finite() {
            return bad("x0 must be finite".into());
        }
        match &self.problem {
            ProblemSpec::Quadratic { h, n, lambda, .. } => {
                if *h == 0 || *n == 0 {
                    return bad("quadratic problems need h, n >= 1".into());
                }
                if !(*lambda >= 0.0 && lambda.is_finite()) {
                    return bad(format!("lambda must be >= 0, got {lambda}"));
                }
            }
            ProblemSpec::Logistic { h, .. } => {
                if *h == 0 {
                    return bad("logistic problems need h >= 1".into());
                }
            }
        }
        let a = &self.algorithm;
        if !(a.delta > 0.0 && a.delta <= 1.0) {
            return bad(format!("delta must lie in (0, 1], got {}", a.delta));
        }
        if !(a.theta0 > 0.0 && a.theta0.is_finite()) {
            return bad(format!("theta0 must be positive, got {}", a.theta0));
        }
        if a.d0 == 0 {
            return bad("d0 must be >= 1".into());
        }
        a.gamma.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if let Some(r) = a.safeguard_radius() {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("R_tilde must be positive, got {r}"));
            }
        }
        if let Some(alpha) = a.extra_alpha {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return bad(format!("extra_alpha must be positive, got {alpha}"));
            }
        }
        if let Some(grid) = &a.extra_alpha_grid {
            if grid.is_empty() || grid.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return bad("extra_alpha_grid must be a nonempty list of positive numbers".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
tolerance = 1e-5

[graph]
kind = "erdos_renyi"
m = 20
p = 0.5
seed = 7

[problem]
kind = "quadratic"
h = 110
n = 100
seed = 1

[algorithm]
name = "adaptive"
gamma = { beta1 = 2.0, beta2 = 1.0 }
safeguard = { enabled = true, R_tilde = 50.0 }
"#;

    #[test]
    fn parses_example_with_defaults() {
        let cfg = RunConfig::from_toml_str(EXAMPLE).unwrap();
        assert_eq!(cfg.graph, GraphSpec::ErdosRenyi { m: 20, p: 0.5, seed: 7 });
        assert_eq!(cfg.c, 0.5);
        assert_eq!(cfg.max_iterations, 50_000);
        assert_eq!(cfg.max_vector_rounds, 200_000);
        assert_eq!(cfg.algorithm.delta, 1.0);
        assert_eq!(cfg.algorithm.safeguard_radius(), Some(50.0));
        assert!(matches!(cfg.problem, ProblemSpec::Quadratic { lambda, .. } if lambda == 0.0));
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig::from_toml_str(EXAMPLE).unwrap();
        let again = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_bad_values() {
        for (from, to) in [
            ("tolerance = 1e-5", "tolerance = -1.0"),
            ("name = \"adaptive\"", "name = \"sgd\""),
            ("beta2 = 1.0", "beta2 = 0.0"),
            ("R_tilde = 50.0", "R_tilde = -1.0"),
            ("h = 110", "h = 0"),
            ("tolerance = 1e-5", "tolerance = 1e-5\nc = 0.7"),
            ("tolerance = 1e-5", "tolerance = 1e-5\nunknown = 3"),
        ] {
            let text = EXAMPLE.replace(from, to);
            assert!(
                matches!(RunConfig::from_toml_str(&text), Err(HarnessError::Config(_))),
                "{to}"
            );
        }
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let text = EXAMPLE
            .replace("kind = \"quadratic\"\nh = 110\nn = 100", "kind = \"logistic\"\npath = \"a3a\"\nh = 159")
            + "\n";
        let text = format!("output = \"out/trace.csv\"\n{text}");
        let path = dir.path().join("run.toml");
        std::fs::write(&path, text).unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.output.unwrap(), dir.path().join("out/trace.csv"));
        match cfg.problem {
            ProblemSpec::Logistic { path, h, .. } => {
                assert_eq!(path, dir.path().join("a3a"));
                assert_eq!(h, 159);
            }
            _ => panic!("expected logistic problem"),
        }
    }
}
