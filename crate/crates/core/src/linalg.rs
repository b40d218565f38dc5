//! Dense complex linear algebra on small sections.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn det(m: &CMatrix) -> Complex64 {
    m.clone().determinant()
}

pub fn solve(m: &CMatrix, rhs: &CVector) -> Result<CVector> {
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::Linalg("singular matrix in solve".into()))
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Linalg("singular matrix in inverse".into()))
}

/// Singular values, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Spectral norm.
pub fn norm2(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Spectral condition number; infinite for singular input.
pub fn cond2(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(vec![]);
    }
    m.clone()
        .try_schur(f64::EPSILON, 0)
        .and_then(|s| s.eigenvalues().map(|v| v.iter().copied().collect()))
        .ok_or_else(|| Error::Linalg("Schur iteration did not converge".into()))
}

/// Eigen-decomposition of a Hermitian matrix: ascending real eigenvalues and
/// matching unit eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (values, vectors)
}

/// Lower Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky(m: &CMatrix) -> Result<CMatrix> {
    // Complex square roots let indefinite input through; the true factor
    // has a real positive diagonal.
    let l = Cholesky::new(m.clone())
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite)?;
    let real_positive = l
        .diagonal()
        .iter()
        .all(|d| d.re > 0.0 && d.im.abs() <= 1e-12 * d.re);
    if real_positive {
        Ok(l)
    } else {
        Err(Error::NotPositiveDefinite)
    }
}

pub fn diag(v: &[Complex64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(v))
}

pub fn unit(n: usize, k: usize) -> CVector {
    let mut e = CVector::zeros(n);
    e[k] = Complex64::ONE;
    e
}
