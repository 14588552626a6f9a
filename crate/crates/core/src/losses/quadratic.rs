use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Loss, LossError, LossFamily, Objective};

/// `f(x) = ‖A x - b‖² + (λ/2)‖x‖²`.
#[derive(Debug, Clone)]
pub struct QuadraticLoss {
    a: DMatrix<f64>,
    b: DVector<f64>,
    lambda: f64,
}

impl QuadraticLoss {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, lambda: f64) -> Result<Self, LossError> {
        if a.nrows() != b.len() {
            return Err(LossError::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        assert!(lambda >= 0.0, "ridge coefficient must be nonnegative");
        Ok(Self { a, b, lambda })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `2 AᵀA + λ I`.
    pub fn hessian(&self) -> DMatrix<f64> {
        let n = self.a.ncols();
        self.a.tr_mul(&self.a) * 2.0 + DMatrix::identity(n, n) * self.lambda
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x - &self.b
    }
}

impl Objective for QuadraticLoss {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64, LossError> {
        self.check_dim(x)?;
        Ok(self.residual(x).norm_squared() + 0.5 * self.lambda * x.norm_squared())
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, LossError> {
        self.check_dim(x)?;
        Ok(self.a.tr_mul(&self.residual(x)) * 2.0 + x * self.lambda)
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>), LossError> {
        self.check_dim(x)?;
        let r = self.residual(x);
        let value = r.norm_squared() + 0.5 * self.lambda * x.norm_squared();
        Ok((value, self.a.tr_mul(&r) * 2.0 + x * self.lambda))
    }

    /// Exactly `‖A s‖² + λ/2 ‖s‖²`.
    fn linearization_gap(
        &self,
        x: &DVector<f64>,
        _fx: f64,
        _grad: &DVector<f64>,
        step: &DVector<f64>,
    ) -> Result<f64, LossError> {
        self.check_dim(x)?;
        self.check_dim(step)?;
        Ok((&self.a * step).norm_squared() + 0.5 * self.lambda * step.norm_squared())
    }
}

/// `m` quadratics with `A_i ∈ ℝ^{h×n}` and `b_i ∈ ℝ^h` drawn i.i.d. from
/// the standard normal distribution. Agent `i`'s `A_i` (row-major) is drawn
/// before its `b_i`, agents in order.
pub fn generate_quadratic(
    m: usize,
    h: usize,
    n: usize,
    lambda: f64,
    seed: u64,
) -> Result<LossFamily, LossError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut losses = Vec::with_capacity(m);
    for _ in 0..m {
        let a_entries: Vec<f64> = (0..h * n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let a = DMatrix::from_row_slice(h, n, &a_entries);
        let b = DVector::from_fn(h, |_, _| StandardNormal.sample(&mut rng));
        losses.push(Loss::Quadratic(QuadraticLoss::new(a, b, lambda)?));
    }
    LossFamily::new(losses)
}
