//! Per-agent smooth losses, data generation and the centralized
//! exact-solution oracle.

mod libsvm;
mod logistic;
mod oracle;
mod quadratic;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use libsvm::{parse_libsvm, parse_libsvm_str, Dataset};
pub use logistic::{partition_logistic, LogisticLoss};
pub use oracle::{centralized_solve, OracleOptions};
pub use quadratic::{generate_quadratic, QuadraticLoss};

#[derive(Debug, Error)]
pub enum LossError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("need {need} samples, dataset has {have}")]
    InsufficientSamples { need: usize, have: usize },
    #[error("loss family is empty")]
    EmptyFamily,
    #[error("centralized solver stopped after {iterations} iterations with gradient norm {grad_norm:e}")]
    NonConvergence { iterations: usize, grad_norm: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A differentiable function of one `d`-vector.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> Result<f64, LossError>;

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, LossError>;

    fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>), LossError> {
        Ok((self.value(x)?, self.gradient(x)?))
    }

    /// `f(x + s) - f(x) - ⟨∇f(x), s⟩` given `fx = f(x)` and `grad = ∇f(x)`.
    /// Losses with a closed form override this to avoid the cancellation of
    /// the plain difference once `s` is tiny relative to `f(x)`.
    fn linearization_gap(
        &self,
        x: &DVector<f64>,
        fx: f64,
        grad: &DVector<f64>,
        step: &DVector<f64>,
    ) -> Result<f64, LossError> {
        Ok(self.value(&(x + step))? - fx - grad.dot(step))
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<(), LossError> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(LossError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            })
        }
    }
}

/// One agent's loss.
#[derive(Debug, Clone)]
pub enum Loss {
    Quadratic(QuadraticLoss),
    Logistic(LogisticLoss),
}

impl Loss {
    pub(crate) fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, LossError> {
        match self {
            Loss::Quadratic(q) => {
                q.check_dim(x)?;
                Ok(q.hessian())
            }
            Loss::Logistic(l) => l.hessian(x),
        }
    }
}

impl Objective for Loss {
    fn dim(&self) -> usize {
        match self {
            Loss::Quadratic(q) => q.dim(),
            Loss::Logistic(l) => l.dim(),
        }
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64, LossError> {
        match self {
            Loss::Quadratic(q) => q.value(x),
            Loss::Logistic(l) => l.value(x),
        }
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, LossError> {
        match self {
            Loss::Quadratic(q) => q.gradient(x),
            Loss::Logistic(l) => l.gradient(x),
        }
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>), LossError> {
        match self {
            Loss::Quadratic(q) => q.value_and_gradient(x),
            Loss::Logistic(l) => l.value_and_gradient(x),
        }
    }

    fn linearization_gap(
        &self,
        x: &DVector<f64>,
        fx: f64,
        grad: &DVector<f64>,
        step: &DVector<f64>,
    ) -> Result<f64, LossError> {
        match self {
            Loss::Quadratic(q) => q.linearization_gap(x, fx, grad, step),
            Loss::Logistic(l) => l.linearization_gap(x, fx, grad, step),
        }
    }
}

/// The agents' losses, all over the same variable dimension.
#[derive(Debug, Clone)]
pub struct LossFamily {
    losses: Vec<Loss>,
    dim: usize,
}

impl LossFamily {
    pub fn new(losses: Vec<Loss>) -> Result<Self, LossError> {
        let dim = losses.first().ok_or(LossError::EmptyFamily)?.dim();
        if let Some(bad) = losses.iter().find(|l| l.dim() != dim) {
            return Err(LossError::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        Ok(Self { losses, dim })
    }

    pub fn agents(&self) -> usize {
        self.losses.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn loss(&self, i: usize) -> &Loss {
        &self.losses[i]
    }

    pub fn losses(&self) -> &[Loss] {
        &self.losses
    }

    pub fn is_quadratic(&self) -> bool {
        self.losses.iter().all(|l| matches!(l, Loss::Quadratic(_)))
    }

    /// Stacked gradient `∇F(X)`: row `i` is `∇f_i(x_i)`, no `1/m` factor.
    pub fn stacked_gradient(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, LossError> {
        self.check_stack(x)?;
        let mut g = DMatrix::zeros(x.nrows(), x.ncols());
        for (i, loss) in self.losses.iter().enumerate() {
            let xi = x.row(i).transpose();
            g.set_row(i, &loss.gradient(&xi)?.transpose());
        }
        Ok(g)
    }

    /// `F(X) = Σ_i f_i(x_i)`.
    pub fn stacked_value(&self, x: &DMatrix<f64>) -> Result<f64, LossError> {
        self.check_stack(x)?;
        let mut total = 0.0;
        for (i, loss) in self.losses.iter().enumerate() {
            total += loss.value(&x.row(i).transpose())?;
        }
        Ok(total)
    }

    /// `Σ_i f_i(x)` at a common point.
    pub fn sum_value(&self, x: &DVector<f64>) -> Result<f64, LossError> {
        self.losses.iter().map(|l| l.value(x)).sum()
    }

    /// `Σ_i ∇f_i(x)` at a common point.
    pub fn sum_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, LossError> {
        let mut g = DVector::zeros(self.dim);
        for l in &self.losses {
            g += l.gradient(x)?;
        }
        Ok(g)
    }

    fn check_stack(&self, x: &DMatrix<f64>) -> Result<(), LossError> {
        if x.nrows() != self.agents() {
            return Err(LossError::DimensionMismatch {
                expected: self.agents(),
                got: x.nrows(),
            });
        }
        if x.ncols() != self.dim {
            return Err(LossError::DimensionMismatch {
                expected: self.dim,
                got: x.ncols(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_rejects_mixed_dimensions() {
        let a = QuadraticLoss::new(DMatrix::identity(2, 2), DVector::zeros(2), 0.0).unwrap();
        let b = QuadraticLoss::new(DMatrix::identity(3, 3), DVector::zeros(3), 0.0).unwrap();
        assert!(matches!(
            LossFamily::new(vec![Loss::Quadratic(a), Loss::Quadratic(b)]),
            Err(LossError::DimensionMismatch { expected: 2, got: 3 })
        ));
        assert!(matches!(LossFamily::new(vec![]), Err(LossError::EmptyFamily)));
    }

    #[test]
    fn stacked_gradient_rows_are_local_gradients() {
        let fam = generate_quadratic(3, 4, 2, 0.5, 9).unwrap();
        let x = DMatrix::from_fn(3, 2, |i, j| (i as f64) - 0.5 * j as f64);
        let g = fam.stacked_gradient(&x).unwrap();
        for i in 0..3 {
            let gi = fam.loss(i).gradient(&x.row(i).transpose()).unwrap();
            assert_eq!(g.row(i).transpose(), gi);
        }
        assert!(fam.stacked_gradient(&DMatrix::zeros(2, 2)).is_err());
        assert!(fam.stacked_value(&DMatrix::zeros(3, 5)).is_err());
    }
}
