//! Fixed points, the two merit functions, ergodic averages and a
//! log-linear rate fit.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::losses::{centralized_solve, Loss, LossError, LossFamily, OracleOptions};
use crate::topology::GossipMatrix;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("ergodic average of zero iterates")]
    EmptyAverage,
    #[error("rate fit needs at least {need} positive samples, got {have}")]
    TooFewPoints { need: usize, have: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("dual fixed point violates 1ᵀY = 0: residual {residual:e} exceeds {bound:e}")]
    DualResidual { residual: f64, bound: f64 },
}

/// Consensual optimum `X★ = 1 x★ᵀ` with dual `Y★ = -∇F(X★)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub x_star: DVector<f64>,
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    /// `Σ_i f_i(x★)`.
    pub value: f64,
}

impl FixedPoint {
    pub fn from_solution(family: &LossFamily, x_star: DVector<f64>) -> Result<Self, MetricsError> {
        if x_star.len() != family.dim() {
            return Err(MetricsError::Shape(format!(
                "solution has length {}, family dimension is {}",
                x_star.len(),
                family.dim()
            )));
        }
        let m = family.agents();
        let x = DMatrix::from_fn(m, x_star.len(), |_, j| x_star[j]);
        let y = -family.stacked_gradient(&x)?;
        let value = family.sum_value(&x_star)?;
        Ok(Self {
            x_star,
            x,
            y,
            value,
        })
    }

    /// `‖1ᵀY★‖`.
    pub fn dual_residual(&self) -> f64 {
        self.y.row_sum().norm()
    }
}

/// Solves the centralized problem and lifts the solution to a fixed point.
pub fn fixed_point(family: &LossFamily, gm: &GossipMatrix, tol: f64) -> Result<FixedPoint, MetricsError> {
    if gm.agents() != family.agents() {
        return Err(MetricsError::Shape(format!(
            "graph has {} agents, family has {}",
            gm.agents(),
            family.agents()
        )));
    }
    let opts = OracleOptions {
        tol,
        ..OracleOptions::default()
    };
    let x_star = centralized_solve(family, opts)?;
    let fp = FixedPoint::from_solution(family, x_star)?;
    let bound = family.agents() as f64 * tol;
    let residual = fp.dual_residual();
    if residual > bound {
        return Err(MetricsError::DualResidual { residual, bound });
    }
    Ok(fp)
}

/// Subtracts the column means, i.e. projects every column onto `1⊥`.
fn center_columns(z: &DMatrix<f64>) -> DMatrix<f64> {
    let m = z.nrows() as f64;
    let mean = z.row_sum() / m;
    DMatrix::from_fn(z.nrows(), z.ncols(), |i, j| z[(i, j)] - mean[j])
}

/// `V = ‖X - X★‖² + θ² ⟨M P(Y - Y★), P(Y - Y★)⟩` with `P` the projection onto `1⊥`.
pub fn merit_sc(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    theta_min_prev: f64,
    fp: &FixedPoint,
    merit_matrix: &DMatrix<f64>,
) -> f64 {
    let primal = (x - &fp.x).norm_squared();
    let dy = center_columns(&(y - &fp.y));
    let dual = (merit_matrix * &dy).dot(&dy);
    primal + theta_min_prev * theta_min_prev * dual
}

/// `ℳ(X) = max(δ ⟨(I - W)X, X⟩, Σ f_i(x_i) - Σ f_i(x★) + ⟨Y★, X⟩)`.
pub fn merit_cvx(
    x: &DMatrix<f64>,
    fp: &FixedPoint,
    gm: &GossipMatrix,
    delta: f64,
    family: &LossFamily,
) -> Result<f64, MetricsError> {
    let disagreement = (x - gm.w() * x).dot(x);
    let gap = family.stacked_value(x)? - fp.value + fp.y.dot(x);
    Ok((delta * disagreement).max(gap))
}

/// Running mean `X̂^k = (1/k) Σ_{t=1}^k X^t`.
#[derive(Debug, Clone)]
pub struct ErgodicAverage {
    mean: DMatrix<f64>,
    count: u64,
}

impl ErgodicAverage {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            mean: DMatrix::zeros(rows, cols),
            count: 0,
        }
    }

    pub fn push(&mut self, x: &DMatrix<f64>) {
        self.count += 1;
        let w = 1.0 / self.count as f64;
        self.mean += (x - &self.mean) * w;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> Result<&DMatrix<f64>, MetricsError> {
        if self.count == 0 {
            return Err(MetricsError::EmptyAverage);
        }
        Ok(&self.mean)
    }
}

/// Same as [`ErgodicAverage::mean`] for an externally kept running sum.
pub fn ergodic_average(running_sum: &DMatrix<f64>, k: u64) -> Result<DMatrix<f64>, MetricsError> {
    if k == 0 {
        return Err(MetricsError::EmptyAverage);
    }
    Ok(running_sum / k as f64)
}

pub const MIN_RATE_POINTS: usize = 10;

/// Least-squares slope of `ln V` against `k` over the second half of the
/// trace. Rows with `V ≤ 0` (or non-finite) are skipped.
pub fn linear_rate_fit(trace: &[(u64, f64)]) -> Result<f64, MetricsError> {
    let tail = &trace[trace.len() / 2..];
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .filter(|(_, v)| *v > 0.0 && v.is_finite())
        .map(|&(k, v)| (k as f64, v.ln()))
        .collect();
    if pts.len() < MIN_RATE_POINTS {
        return Err(MetricsError::TooFewPoints {
            need: MIN_RATE_POINTS,
            have: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let (mk, mv) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (k, v)| (a + k / n, b + v / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(sxy, sxx), (k, v)| {
        (sxy + (k - mk) * (v - mv), sxx + (k - mk) * (k - mk))
    });
    Ok(if sxx == 0.0 { 0.0 } else { sxy / sxx })
}

/// Curvature range of a quadratic family: `μ = min_i μ_i` and `L = max_i L_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditioning {
    pub mu: f64,
    pub l_max: f64,
}

impl Conditioning {
    pub fn kappa(&self) -> f64 {
        self.l_max / self.mu
    }
}

/// `None` for families with a non-quadratic member.
pub fn quadratic_conditioning(family: &LossFamily) -> Option<Conditioning> {
    let mut mu = f64::INFINITY;
    let mut l_max = 0.0f64;
    for loss in family.losses() {
        let Loss::Quadratic(q) = loss else {
            return None;
        };
        let eig = SymmetricEigen::new(q.hessian()).eigenvalues;
        mu = mu.min(eig.min());
        l_max = l_max.max(eig.max());
    }
    Some(Conditioning { mu, l_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{generate_quadratic, QuadraticLoss};
    use crate::topology::{spectral_data, Graph};

    fn shifted_pair() -> LossFamily {
        let q = |b: f64| {
            Loss::Quadratic(
                QuadraticLoss::new(DMatrix::identity(1, 1), DVector::from_element(1, b), 0.0).unwrap(),
            )
        };
        LossFamily::new(vec![q(1.0), q(-1.0)]).unwrap()
    }

    fn zero_pair() -> LossFamily {
        let z = || Loss::Quadratic(QuadraticLoss::new(DMatrix::zeros(1, 1), DVector::zeros(1), 0.0).unwrap());
        LossFamily::new(vec![z(), z()]).unwrap()
    }

    fn complete2() -> GossipMatrix {
        GossipMatrix::metropolis(Graph::complete(2).unwrap(), 0.5).unwrap()
    }

    #[test]
    fn fixed_point_hand_examples() {
        let gm = complete2();
        let fp = fixed_point(&shifted_pair(), &gm, 1e-10).unwrap();
        assert!(fp.x_star[0].abs() < 1e-14);
        assert!((fp.y[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((fp.y[(1, 0)] + 2.0).abs() < 1e-12);
        assert!(fp.dual_residual() < 1e-12);

        let id = || Loss::Quadratic(QuadraticLoss::new(DMatrix::identity(2, 2), DVector::zeros(2), 0.0).unwrap());
        let fam = LossFamily::new(vec![id(), id()]).unwrap();
        let fp = fixed_point(&fam, &gm, 1e-10).unwrap();
        assert_eq!(fp.x_star.norm(), 0.0);
        assert_eq!(fp.y.norm(), 0.0);
    }

    #[test]
    fn random_fixed_point_is_stationary() {
        let fam = generate_quadratic(20, 5, 6, 0.1, 3).unwrap();
        let gm = GossipMatrix::metropolis(Graph::line(20).unwrap(), 0.5).unwrap();
        let fp = fixed_point(&fam, &gm, 1e-8).unwrap();
        assert!(fam.sum_gradient(&fp.x_star).unwrap().norm() <= 1e-8);
        assert!(fp.x.row_iter().all(|r| r == fp.x.row(0)));
    }

    #[test]
    fn merit_sc_hand_values() {
        let gm = complete2();
        let fam = shifted_pair();
        let fp = fixed_point(&fam, &gm, 1e-10).unwrap();
        let mm = spectral_data(&gm).merit_matrix;
        assert_eq!(merit_sc(&fp.x, &fp.y, 3.0, &fp, &mm), 0.0);
        let e = DMatrix::from_column_slice(2, 1, &[0.6, 0.8]);
        assert!((merit_sc(&(&fp.x + e), &fp.y, 3.0, &fp, &mm) - 1.0).abs() < 1e-12);
        let dy = DMatrix::from_column_slice(2, 1, &[1.0, -1.0]);
        assert!((merit_sc(&fp.x, &(&fp.y + dy), 2.0, &fp, &mm) - 8.0).abs() < 1e-12);
        // drift along 1 is invisible
        let drift = DMatrix::from_element(2, 1, 1e-3);
        assert!(merit_sc(&fp.x, &(&fp.y + drift), 2.0, &fp, &mm).abs() < 1e-12);
    }

    #[test]
    fn merit_cvx_hand_values() {
        let gm = complete2();
        let fam = zero_pair();
        let fp = fixed_point(&fam, &gm, 1e-10).unwrap();
        let x = DMatrix::from_column_slice(2, 1, &[1.0, -1.0]);
        assert!((merit_cvx(&x, &fp, &gm, 1.0, &fam).unwrap() - 1.0).abs() < 1e-12);

        let fam = shifted_pair();
        let fp = fixed_point(&fam, &gm, 1e-10).unwrap();
        assert!(merit_cvx(&fp.x, &fp, &gm, 1.0, &fam).unwrap().abs() < 1e-12);
        let consensual = DMatrix::from_element(2, 1, 0.5);
        let v = merit_cvx(&consensual, &fp, &gm, 1.0, &fam).unwrap();
        // Σ f(0.5) - Σ f(0) = 0.25 + 2.25 - 2
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ergodic_average_examples() {
        let c = DMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64 - 1.5);
        let mut avg = ErgodicAverage::new(3, 2);
        assert!(matches!(avg.mean(), Err(MetricsError::EmptyAverage)));
        for _ in 0..4 {
            avg.push(&c);
        }
        assert!((avg.mean().unwrap() - &c).amax() < 1e-15);

        let mut avg = ErgodicAverage::new(3, 2);
        avg.push(&DMatrix::zeros(3, 2));
        avg.push(&(&c * 2.0));
        assert!((avg.mean().unwrap() - &c).amax() < 1e-15);
        assert!(ergodic_average(&c, 0).is_err());
    }

    #[test]
    fn ergodic_average_matches_direct_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<DMatrix<f64>> = (0..5)
            .map(|_| DMatrix::from_fn(4, 3, |_, _| rng.random_range(-10.0..10.0)))
            .collect();
        let mut avg = ErgodicAverage::new(4, 3);
        let mut sum = DMatrix::zeros(4, 3);
        for x in &xs {
            avg.push(x);
            sum += x;
        }
        let direct = ergodic_average(&sum, 5).unwrap();
        assert!((avg.mean().unwrap() - direct).amax() < 1e-12);
    }

    #[test]
    fn rate_fit_examples() {
        let geo: Vec<(u64, f64)> = (0..100).map(|k| (k, 0.5f64.powi(k as i32))).collect();
        assert!((linear_rate_fit(&geo).unwrap() - 0.5f64.ln()).abs() < 1e-9);
        let flat: Vec<(u64, f64)> = (0..40).map(|k| (k, 3.0)).collect();
        assert_eq!(linear_rate_fit(&flat).unwrap(), 0.0);
        let harmonic: Vec<(u64, f64)> = (1..=10_000).map(|k| (k, 1.0 / k as f64)).collect();
        let early = linear_rate_fit(&harmonic[..200]).unwrap();
        let late = linear_rate_fit(&harmonic).unwrap();
        assert!(late.abs() < early.abs());
        assert!(late.abs() < 1e-3);
    }

    #[test]
    fn rate_fit_skips_nonpositive_rows() {
        let mut t: Vec<(u64, f64)> = (0..40).map(|k| (k, 2f64.powi(-(k as i32)))).collect();
        t[30].1 = 0.0;
        t[31].1 = -1.0;
        assert!((linear_rate_fit(&t).unwrap() + 2f64.ln()).abs() < 1e-9);
        let short: Vec<(u64, f64)> = (0..15).map(|k| (k, 1.0)).collect();
        assert!(matches!(
            linear_rate_fit(&short),
            Err(MetricsError::TooFewPoints { have: 8, .. })
        ));
    }

    #[test]
    fn conditioning_of_ridge_family() {
        let q = |a: f64, lambda: f64| {
            Loss::Quadratic(QuadraticLoss::new(DMatrix::from_element(1, 1, a), DVector::zeros(1), lambda).unwrap())
        };
        let fam = LossFamily::new(vec![q(1.0, 0.0), q(2.0, 2.0)]).unwrap();
        let c = quadratic_conditioning(&fam).unwrap();
        assert!((c.l_max - 10.0).abs() < 1e-12);
        assert!((c.mu - 2.0).abs() < 1e-12);
        assert!((c.kappa() - 5.0).abs() < 1e-12);
    }
}
