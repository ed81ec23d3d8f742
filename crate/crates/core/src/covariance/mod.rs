//! Correlation matrices on an evenly spaced periodic grid.
//!
//! Gridpoints sit at angles `2πi/n` on the unit circle. Distances are
//! chordal (`2 sin(θ/2)`) rather than great-circle, which keeps the SOAR
//! kernel positive definite on the circle.

mod circulant;

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::solvers::eigen::{symmetric_eigendecomposition, EigenDecomposition};

pub use circulant::{
    circulant_eigenvalues, circulant_from_first_row, shift_invariance_defect, CirculantSpec,
};

/// Eigenvalues in `[-ROUNDOFF_FLOOR, 0]` are treated as roundoff zeros by
/// [`symmetric_sqrt`].
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircleGrid {
    n_points: usize,
}

impl CircleGrid {
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::param(format!(
                "a circle grid needs at least 2 points, got {n_points}"
            )));
        }
        Ok(Self { n_points })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Angle between adjacent gridpoints, `2π/n`.
    pub fn angular_spacing(&self) -> f64 {
        2.0 * PI / self.n_points as f64
    }

    /// Number of grid steps between `i` and `j` going the short way round.
    pub fn wrapped_offset(&self, i: usize, j: usize) -> usize {
        let d = i.abs_diff(j) % self.n_points;
        d.min(self.n_points - d)
    }

    /// Chordal distance for a wrapped offset of `k` steps.
    ///
    /// The angle is formed as `π·(k/n)`: offsets that describe the same
    /// fraction of the circle on different grids (e.g. `2k/2n` and `k/n`)
    /// give bit-identical distances.
    pub fn chord_for_offset(&self, k: usize) -> f64 {
        let half_angle = PI * (k as f64 / self.n_points as f64);
        (2.0 * half_angle.sin()).abs()
    }

    pub fn chordal_distance(&self, i: usize, j: usize) -> f64 {
        self.chord_for_offset(self.wrapped_offset(i, j))
    }

    /// Chordal distance between adjacent gridpoints, `2 sin(π/n)`.
    pub fn spacing(&self) -> f64 {
        self.chord_for_offset(1)
    }
}

/// Second-order autoregressive correlation at distance `d`.
pub fn soar_correlation(distance: f64, lengthscale: f64) -> f64 {
    let r = distance.abs() / lengthscale;
    (1.0 + r) * (-r).exp()
}

fn check_lengthscale(lengthscale: f64) -> Result<()> {
    if !(lengthscale > 0.0 && lengthscale.is_finite()) {
        return Err(Error::param(format!(
            "lengthscale must be positive and finite, got {lengthscale}"
        )));
    }
    Ok(())
}

/// First row of the SOAR matrix on `grid`.
pub fn soar_first_row(grid: &CircleGrid, lengthscale: f64) -> Result<Vec<f64>> {
    check_lengthscale(lengthscale)?;
    Ok((0..grid.n_points())
        .map(|j| soar_correlation(grid.chordal_distance(0, j), lengthscale))
        .collect())
}

/// A dense, symmetric, strictly positive definite matrix with unit diagonal.
///
/// The eigendecomposition is computed once at construction (it doubles as
/// the positive-definiteness check); square roots are derived from it on
/// first use and cached.
#[derive(Debug)]
pub struct CorrelationMatrix {
    entries: DMatrix<f64>,
    lengthscale: Option<f64>,
    eigen: EigenDecomposition,
    sqrt: OnceLock<DMatrix<f64>>,
    inv_sqrt: OnceLock<DMatrix<f64>>,
}

impl Clone for CorrelationMatrix {
    fn clone(&self) -> Self {
        Self {
            entries: self.entries.clone(),
            lengthscale: self.lengthscale,
            eigen: self.eigen.clone(),
            sqrt: self.sqrt.clone(),
            inv_sqrt: self.inv_sqrt.clone(),
        }
    }
}

impl CorrelationMatrix {
    /// Validates an explicit matrix: exact symmetry, unit diagonal, and a
    /// strictly positive minimum eigenvalue.
    pub fn from_entries(entries: DMatrix<f64>) -> Result<Self> {
        Self::build(entries, None)
    }

    fn build(entries: DMatrix<f64>, lengthscale: Option<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::param(format!(
                "correlation matrix must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        for i in 0..n {
            if entries[(i, i)] != 1.0 {
                return Err(Error::param(format!(
                    "diagonal entry {i} is {}, expected 1",
                    entries[(i, i)]
                )));
            }
            for j in (i + 1)..n {
                if entries[(i, j)] != entries[(j, i)] {
                    return Err(Error::param(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        let eigen = symmetric_eigendecomposition(&entries)?;
        if eigen.min() <= 0.0 {
            return Err(Error::Degenerate {
                min_eigenvalue: eigen.min(),
            });
        }
        Ok(Self {
            entries,
            lengthscale,
            eigen,
            sqrt: OnceLock::new(),
            inv_sqrt: OnceLock::new(),
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_entries(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn lengthscale(&self) -> Option<f64> {
        self.lengthscale
    }

    /// Eigenvalues, largest first.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn eigen(&self) -> &EigenDecomposition {
        &self.eigen
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigen.max()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigen.min()
    }

    /// Unique symmetric positive definite square root.
    pub fn sqrt(&self) -> &DMatrix<f64> {
        self.sqrt.get_or_init(|| self.eigen.spectral_map(f64::sqrt))
    }

    /// Inverse of the symmetric square root, `M^{-1/2}`.
    pub fn inv_sqrt(&self) -> &DMatrix<f64> {
        self.inv_sqrt
            .get_or_init(|| self.eigen.spectral_map(|x| 1.0 / x.sqrt()))
    }

    /// Inverse through a Cholesky factorization.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        spd_inverse(&self.entries)
    }
}

/// SOAR correlation matrix on `grid`, built entrywise from the kernel.
///
/// Each entry is a function of the wrapped offset only, so the result is
/// exactly circulant and exactly symmetric.
pub fn build_soar(grid: &CircleGrid, lengthscale: f64) -> Result<CorrelationMatrix> {
    check_lengthscale(lengthscale)?;
    let n = grid.n_points();
    let entries = DMatrix::from_fn(n, n, |i, j| {
        soar_correlation(grid.chordal_distance(i, j), lengthscale)
    });
    CorrelationMatrix::build(entries, Some(lengthscale))
}

/// Symmetric square root of a symmetric positive semidefinite matrix.
#[derive(Debug, Clone)]
pub struct SquareRoot {
    pub matrix: DMatrix<f64>,
    /// Set when eigenvalues in `[-1e-12, 0]` were clamped to zero.
    pub clamped: bool,
}

/// Spectral square root `V Λ^{1/2} Vᵀ`.
///
/// Roundoff-level negative eigenvalues are clamped to zero; anything below
/// `-ROUNDOFF_FLOOR` is rejected.
pub fn symmetric_sqrt(m: &DMatrix<f64>) -> Result<SquareRoot> {
    let eigen = symmetric_eigendecomposition(m)?;
    let min = eigen.min();
    if min < -ROUNDOFF_FLOOR {
        return Err(Error::NotPositiveDefinite(format!(
            "eigenvalue {min:e} is below the roundoff floor"
        )));
    }
    let clamped = min < 0.0;
    let matrix = eigen.spectral_map(|x| x.max(0.0).sqrt());
    Ok(SquareRoot { matrix, clamped })
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::param("expected a nonempty square matrix"));
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    let inv = chol.inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_sig3(x: f64) -> f64 {
        let e = x.abs().log10().floor() as i32 - 2;
        (x / 10f64.powi(e)).round() * 10f64.powi(e)
    }

    fn frob_rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn grid_rejects_tiny() {
        assert!(CircleGrid::new(1).is_err());
        assert!(CircleGrid::new(2).is_ok());
    }

    #[test]
    fn chordal_distance_properties() {
        let g = CircleGrid::new(12).unwrap();
        for i in 0..12 {
            assert_eq!(g.chordal_distance(i, i), 0.0);
            for j in 0..12 {
                assert_eq!(g.chordal_distance(i, j), g.chordal_distance(j, i));
                if i != j {
                    assert!(g.chordal_distance(i, j) > 0.0);
                }
            }
        }
        // opposite points are a diameter apart
        assert!((g.chordal_distance(0, 6) - 2.0).abs() < 1e-15);
        assert!((g.spacing() - 2.0 * (PI / 12.0).sin()).abs() < 1e-15);
        assert!((g.angular_spacing() - PI / 6.0).abs() < 1e-15);
    }

    #[test]
    fn soar_has_unit_diagonal() {
        for &(n, l) in &[(5, 0.1), (40, 0.7), (64, 1.0)] {
            let m = build_soar(&CircleGrid::new(n).unwrap(), l).unwrap();
            assert!((0..n).all(|i| m.entries()[(i, i)] == 1.0));
        }
    }

    #[test]
    fn soar_matches_scalar_formula() {
        // Independent evaluation of the kernel from raw angles.
        let n = 8;
        let l = 0.5;
        let m = build_soar(&CircleGrid::new(n).unwrap(), l).unwrap();
        for i in 0..n {
            for j in 0..n {
                let theta = 2.0 * PI * (i as f64 - j as f64) / n as f64;
                let d = (2.0 * (theta / 2.0).sin()).abs();
                let expect = (1.0 + d / l) * (-d / l).exp();
                assert!((m.entries()[(i, j)] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn soar_rejects_bad_lengthscale() {
        let g = CircleGrid::new(10).unwrap();
        assert!(matches!(build_soar(&g, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(build_soar(&g, -1.0), Err(Error::Parameter(_))));
        assert!(build_soar(&g, f64::NAN).is_err());
    }

    #[test]
    fn soar_is_circulant() {
        let m = build_soar(&CircleGrid::new(50).unwrap(), 0.4).unwrap();
        assert_eq!(shift_invariance_defect(m.entries()), 0.0);
    }

    #[test]
    fn table1_lambda_max_values() {
        // λ_1 entries of Table 1 (R is 100x100, B is 200x200)
        let cases = [
            (100, 0.1, 6.40e0),
            (100, 0.33, 2.26e1),
            (100, 1.0, 6.40e1),
            (200, 0.1, 1.28e1),
            (200, 0.66, 9.35e1),
            (200, 1.0, 1.28e2),
        ];
        for (n, l, expect) in cases {
            let m = build_soar(&CircleGrid::new(n).unwrap(), l).unwrap();
            let got = m.lambda_max();
            assert_eq!(round_sig3(got), round_sig3(expect), "n={n} L={l}: {got}");
        }
    }

    #[test]
    fn from_entries_validates() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(CorrelationMatrix::from_entries(asym).is_err());
        let diag = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        assert!(CorrelationMatrix::from_entries(diag).is_err());
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            CorrelationMatrix::from_entries(singular),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn sqrt_of_identity() {
        let s = symmetric_sqrt(&DMatrix::identity(4, 4)).unwrap();
        assert!((s.matrix - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);
        assert!(!s.clamped);
    }

    #[test]
    fn sqrt_spectral_mapping() {
        let c = circulant_from_first_row(&[2.5, 0.75, 0.0, 0.75])
            .unwrap()
            .to_matrix();
        let s = symmetric_sqrt(&c).unwrap();
        let vals = crate::solvers::eigen::symmetric_eigenvalues(&s.matrix).unwrap();
        let expect = [2.0, 2.5_f64.sqrt(), 2.5_f64.sqrt(), 1.0];
        for (v, e) in vals.iter().zip(expect) {
            assert!((v - e).abs() < 1e-13, "{vals:?}");
        }
    }

    #[test]
    fn sqrt_reconstructs_and_commutes() {
        let m = build_soar(&CircleGrid::new(200).unwrap(), 0.5).unwrap();
        let x = m.sqrt();
        assert!(frob_rel(&(x * x), m.entries()) <= 1e-10);
        let comm = (x * m.entries() - m.entries() * x).norm();
        assert!(comm <= 1e-10 * m.entries().norm() * x.norm());
        let general = symmetric_sqrt(m.entries()).unwrap();
        assert!((general.matrix - x).amax() < 1e-10);
    }

    #[test]
    fn sqrt_clamps_roundoff_and_rejects_negative() {
        let semi = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let s = symmetric_sqrt(&semi).unwrap();
        assert!(((&s.matrix * &s.matrix) - &semi).amax() < 1e-12);
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-6]);
        assert!(matches!(
            symmetric_sqrt(&neg),
            Err(Error::NotPositiveDefinite(_))
        ));
        let tiny = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-14]);
        assert!(symmetric_sqrt(&tiny).unwrap().clamped);
    }

    #[test]
    fn inverse_closed_form() {
        assert_eq!(
            spd_inverse(&DMatrix::identity(3, 3)).unwrap(),
            DMatrix::<f64>::identity(3, 3)
        );
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 1.0]) / 0.75;
        assert!((spd_inverse(&m).unwrap() - expect).amax() < 1e-14);
    }

    #[test]
    fn inverse_residual_soar() {
        let m = build_soar(&CircleGrid::new(100).unwrap(), 0.7).unwrap();
        let inv = m.inverse().unwrap();
        let resid = (m.entries() * &inv - DMatrix::<f64>::identity(100, 100)).norm();
        assert!(resid <= 1e-8 * 100.0, "residual {resid}");
    }

    #[test]
    fn inverse_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            spd_inverse(&m),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn inv_sqrt_is_inverse_of_sqrt() {
        let m = build_soar(&CircleGrid::new(60).unwrap(), 0.3).unwrap();
        let prod = m.sqrt() * m.inv_sqrt();
        assert!((prod - DMatrix::<f64>::identity(60, 60)).amax() < 1e-9);
    }
}
