use serde::{Deserialize, Serialize};

use super::AlgorithmError;

/// Growth factors `γ^k ≥ 1` applied to the stepsize before each backtracking
/// search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSchedule {
    /// `γ^k = ((k + β₁)/(k + 1))^β₂`.
    Polynomial { beta1: f64, beta2: f64 },
    /// `γ^k = constant` for all `k`.
    Constant { constant: f64 },
}

impl Default for GammaSchedule {
    fn default() -> Self {
        GammaSchedule::Polynomial {
            beta1: 2.0,
            beta2: 1.0,
        }
    }
}

pub fn gamma_schedule(k: u64, beta1: f64, beta2: f64) -> Result<f64, AlgorithmError> {
    let s = GammaSchedule::Polynomial { beta1, beta2 };
    s.validate()?;
    Ok(s.at(k))
}

impl GammaSchedule {
    pub fn validate(&self) -> Result<(), AlgorithmError> {
        match *self {
            GammaSchedule::Polynomial { beta1, beta2 } => {
                if !(beta1 >= 1.0 && beta1.is_finite()) {
                    return Err(AlgorithmError::InvalidParameter(format!(
                        "beta1 must be >= 1, got {beta1}"
                    )));
                }
                if !(beta2 > 0.0 && beta2.is_finite()) {
                    return Err(AlgorithmError::InvalidParameter(format!(
                        "beta2 must be > 0, got {beta2}"
                    )));
                }
            }
            GammaSchedule::Constant { constant } => {
                if !(constant >= 1.0 && constant.is_finite()) {
                    return Err(AlgorithmError::InvalidParameter(format!(
                        "constant gamma must be >= 1, got {constant}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `γ^k`.
    pub fn at(&self, k: u64) -> f64 {
        match *self {
            GammaSchedule::Polynomial { beta1, beta2 } => {
                let ratio = (k as f64 + beta1) / (k as f64 + 1.0);
                if beta2 == 1.0 {
                    ratio
                } else {
                    ratio.powf(beta2)
                }
            }
            GammaSchedule::Constant { constant } => constant,
        }
    }

    /// Growth factor used by the searches of iteration `k`, i.e. `γ^{k-1}`.
    /// The first iteration uses 1 so the very first search starts from the
    /// user's initial stepsize.
    pub fn growth_at_iteration(&self, k: u64) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.at(k - 1)
        }
    }
}
