use nalgebra::{DMatrix, SymmetricEigen};

use super::GossipMatrix;

/// Eigenvalues of `I - W̃` below this are treated as zero in the pseudoinverse.
pub const PINV_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Second largest eigenvalue of `W̃`; `None` for a single agent.
    pub lambda2: Option<f64>,
    /// Smallest eigenvalue of `W̃`.
    pub lambda_min: f64,
    /// `c⁻¹ (I - W̃)† - I`, the weight of the dual term in the strongly
    /// convex merit function.
    pub merit_matrix: DMatrix<f64>,
}

/// Eigenvalues of a symmetric matrix in nonincreasing order.
pub(crate) fn sorted_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Moore–Penrose pseudoinverse of a symmetric matrix.
pub(crate) fn symmetric_pinv(a: &DMatrix<f64>, cutoff: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let inv = eig
        .eigenvalues
        .map(|l| if l.abs() <= cutoff { 0.0 } else { 1.0 / l });
    let q = &eig.eigenvectors;
    q * DMatrix::from_diagonal(&inv) * q.transpose()
}

pub fn spectral_data(gm: &GossipMatrix) -> SpectralData {
    let m = gm.agents();
    let ev = sorted_eigenvalues(gm.w_tilde());
    let laplacian_like = DMatrix::identity(m, m) - gm.w_tilde();
    let mut merit_matrix =
        symmetric_pinv(&laplacian_like, PINV_CUTOFF) / gm.c() - DMatrix::identity(m, m);
    // symmetrize away eigensolver round-off
    merit_matrix = (&merit_matrix + merit_matrix.transpose()) * 0.5;
    SpectralData {
        lambda2: ev.get(1).copied(),
        lambda_min: *ev.last().expect("graphs have at least one agent"),
        merit_matrix,
    }
}
