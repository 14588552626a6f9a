use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Loss, LossError, LossFamily, Objective};

/// `f(x) = (1/h) Σ_j log(1 + exp(-b_j ⟨x, a_j⟩))` with labels `b_j ∈ {-1, +1}`.
#[derive(Debug, Clone)]
pub struct LogisticLoss {
    // one sample per row
    features: DMatrix<f64>,
    labels: DVector<f64>,
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `softplus(u + du) - softplus(u) - σ(u) du`, accurate for small `du`.
fn softplus_gap(u: f64, du: f64) -> f64 {
    let s = sigmoid(u);
    if du.abs() < 1e-4 {
        let d2 = s * (1.0 - s);
        let d3 = d2 * (1.0 - 2.0 * s);
        let d4 = d2 * (1.0 - 6.0 * s + 6.0 * s * s);
        let du2 = du * du;
        du2 * (d2 / 2.0 + du * (d3 / 6.0 + du * d4 / 24.0))
    } else if du < 700.0 {
        (s * du.exp_m1()).ln_1p() - s * du
    } else {
        softplus(u + du) - softplus(u) - s * du
    }
}

impl LogisticLoss {
    pub fn new(features: DMatrix<f64>, labels: DVector<f64>) -> Result<Self, LossError> {
        if features.nrows() != labels.len() {
            return Err(LossError::DimensionMismatch {
                expected: features.nrows(),
                got: labels.len(),
            });
        }
        if labels.is_empty() {
            return Err(LossError::EmptyDataset);
        }
        Ok(Self { features, labels })
    }

    pub fn samples(&self) -> usize {
        self.labels.len()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.labels
    }

    /// `(1/h) Σ_j σ_j (1 - σ_j) a_j a_jᵀ`.
    pub fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, LossError> {
        self.check_dim(x)?;
        let margins = &self.features * x;
        let h = self.samples() as f64;
        let weights = margins.map(|z| {
            let s = sigmoid(z);
            s * (1.0 - s) / h
        });
        let mut scaled = self.features.clone();
        for (mut row, w) in scaled.row_iter_mut().zip(weights.iter()) {
            row *= *w;
        }
        Ok(self.features.tr_mul(&scaled))
    }

    // margins z_j = b_j ⟨x, a_j⟩
    fn margins(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.features * x).component_mul(&self.labels)
    }

    fn gradient_from_margins(&self, z: &DVector<f64>) -> DVector<f64> {
        let h = self.samples() as f64;
        // coefficient of a_j: -b_j σ(-z_j) / h
        let coeff = DVector::from_fn(z.len(), |j, _| -self.labels[j] * sigmoid(-z[j]) / h);
        self.features.tr_mul(&coeff)
    }
}

impl Objective for LogisticLoss {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64, LossError> {
        self.check_dim(x)?;
        let z = self.margins(x);
        Ok(z.iter().map(|&z| softplus(-z)).sum::<f64>() / self.samples() as f64)
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, LossError> {
        self.check_dim(x)?;
        Ok(self.gradient_from_margins(&self.margins(x)))
    }

    fn linearization_gap(
        &self,
        x: &DVector<f64>,
        _fx: f64,
        _grad: &DVector<f64>,
        step: &DVector<f64>,
    ) -> Result<f64, LossError> {
        self.check_dim(x)?;
        self.check_dim(step)?;
        let z = self.margins(x);
        let dz = self.margins(step);
        let total: f64 = z.iter().zip(dz.iter()).map(|(&z, &dz)| softplus_gap(-z, -dz)).sum();
        Ok(total / self.samples() as f64)
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>), LossError> {
        self.check_dim(x)?;
        let z = self.margins(x);
        let value = z.iter().map(|&z| softplus(-z)).sum::<f64>() / self.samples() as f64;
        Ok((value, self.gradient_from_margins(&z)))
    }
}

/// Shuffles the samples with `seed`, then gives each of the `m` agents a
/// contiguous block of `samples_per_agent`. Leftover samples are dropped.
pub fn partition_logistic(
    dataset: &Dataset,
    m: usize,
    samples_per_agent: usize,
    seed: u64,
) -> Result<LossFamily, LossError> {
    let need = m * samples_per_agent;
    if need > dataset.len() || samples_per_agent == 0 {
        return Err(LossError::InsufficientSamples {
            need,
            have: dataset.len(),
        });
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let losses = order[..need]
        .chunks(samples_per_agent)
        .map(|block| {
            let mut features = DMatrix::zeros(block.len(), dataset.dim);
            for (r, &s) in block.iter().enumerate() {
                for &(j, v) in &dataset.rows[s] {
                    features[(r, j)] = v;
                }
            }
            let labels = DVector::from_iterator(block.len(), block.iter().map(|&s| dataset.labels[s]));
            LogisticLoss::new(features, labels).map(Loss::Logistic)
        })
        .collect::<Result<Vec<_>, _>>()?;
    LossFamily::new(losses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::parse_libsvm_str;

    fn tiny() -> LogisticLoss {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -0.3, 2.0, 0.7, -1.1]);
        LogisticLoss::new(a, DVector::from_vec(vec![1.0, -1.0, 1.0])).unwrap()
    }

    #[test]
    fn value_at_origin_is_log_two() {
        let f = tiny();
        assert!((f.value(&DVector::zeros(2)).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn extreme_margins_stay_finite() {
        let f = tiny();
        let x = DVector::from_vec(vec![800.0, -800.0]);
        let (v, g) = f.value_and_gradient(&x).unwrap();
        assert!(v.is_finite() && g.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let f = tiny();
        let x = DVector::from_vec(vec![0.3, -0.2]);
        let h = f.hessian(&x).unwrap();
        let eps = 1e-6;
        for k in 0..2 {
            let mut e = DVector::zeros(2);
            e[k] = eps;
            let fd = (f.gradient(&(&x + &e)).unwrap() - f.gradient(&(&x - &e)).unwrap()) / (2.0 * eps);
            assert!((fd - h.column(k)).norm() < 1e-8);
        }
    }

    #[test]
    fn linearization_gap_matches_difference_and_curvature() {
        let f = tiny();
        let x = DVector::from_vec(vec![0.4, -0.9]);
        let (fx, g) = f.value_and_gradient(&x).unwrap();
        let h = f.hessian(&x).unwrap();
        for scale in [1e-9, 1e-6, 1e-4, 1e-2, 1.0, 30.0] {
            let s = DVector::from_vec(vec![0.6, 0.8]) * scale;
            let gap = f.linearization_gap(&x, fx, &g, &s).unwrap();
            assert!(gap >= 0.0);
            if scale >= 1e-2 {
                let direct = f.value(&(&x + &s)).unwrap() - fx - g.dot(&s);
                assert!((gap - direct).abs() <= 1e-12 * direct.abs().max(1.0), "{scale}");
            } else {
                let second_order = 0.5 * (&h * &s).dot(&s);
                assert!((gap - second_order).abs() <= 1e-3 * second_order, "{scale}");
            }
        }
        let s = DVector::from_vec(vec![1000.0, 0.0]);
        assert!(f.linearization_gap(&x, fx, &g, &s).unwrap().is_finite());
    }

    #[test]
    fn partition_blocks_and_determinism() {
        let text: String = (0..11)
            .map(|i| format!("{} {}:1 {}:{}\n", if i % 2 == 0 { "+1" } else { "-1" }, i % 3 + 1, 4, i))
            .collect();
        let ds = parse_libsvm_str(&text).unwrap();
        let fam = partition_logistic(&ds, 3, 3, 5).unwrap();
        assert_eq!(fam.agents(), 3);
        assert_eq!(fam.dim(), 4);
        let again = partition_logistic(&ds, 3, 3, 5).unwrap();
        for (a, b) in fam.losses().iter().zip(again.losses()) {
            let (Loss::Logistic(a), Loss::Logistic(b)) = (a, b) else { panic!() };
            assert_eq!(a.features(), b.features());
            assert_eq!(a.labels(), b.labels());
            assert_eq!(a.samples(), 3);
        }
        // 9 of 11 samples used, all distinct
        let mut used: Vec<f64> = fam
            .losses()
            .iter()
            .flat_map(|l| {
                let Loss::Logistic(l) = l else { panic!() };
                l.features().column(3).iter().copied().collect::<Vec<_>>()
            })
            .collect();
        used.sort_by(f64::total_cmp);
        used.dedup();
        assert_eq!(used.len(), 9);
        assert!(matches!(
            partition_logistic(&ds, 4, 3, 5),
            Err(LossError::InsufficientSamples { need: 12, have: 11 })
        ));
    }

    #[test]
    fn single_agent_partition() {
        let ds = parse_libsvm_str("+1 1:1\n-1 2:1\n+1 1:2\n").unwrap();
        let fam = partition_logistic(&ds, 1, 2, 0).unwrap();
        let Loss::Logistic(l) = fam.loss(0) else { panic!() };
        assert_eq!(l.samples(), 2);
    }
}
