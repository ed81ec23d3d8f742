//! Dense symmetric eigendecomposition.
//!
//! Eigenvalues are always returned largest first, matching the
//! `λ_1 ≥ λ_2 ≥ … ≥ λ_k` convention used throughout the crate.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Maximum entrywise asymmetry accepted, relative to `max(1, max|a_ij|)`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors; column `i` belongs to `values[i]`.
    pub vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Builds `V f(Λ) Vᵀ`, symmetrized to remove roundoff asymmetry.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let s = f(lambda);
            scaled.column_mut(j).scale_mut(s);
        }
        let out = &scaled * self.vectors.transpose();
        symmetrize(&out)
    }
}

/// Largest entrywise difference `|a_ij − a_ji|`.
pub fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// `(A + Aᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::param(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Err(Error::param("empty matrix"));
    }
    let defect = symmetry_defect(m);
    let scale = max_abs(m).max(1.0);
    if defect > SYMMETRY_TOLERANCE * scale {
        return Err(Error::param(format!(
            "matrix is not symmetric (defect {defect:e})"
        )));
    }
    Ok(())
}

fn max_sweeps(dim: usize) -> usize {
    100 * dim.max(10)
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues descending.
pub fn symmetric_eigendecomposition(m: &DMatrix<f64>) -> Result<EigenDecomposition> {
    check_symmetric(m)?;
    let dim = m.nrows();
    let max_iterations = max_sweeps(dim);
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, max_iterations)
        .ok_or(Error::EigenNonConvergence { dim, max_iterations })?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenDecomposition { values, vectors })
}

/// Eigenvalues only, descending. Cheaper than the full decomposition.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}
