use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Imaginary parts below this are treated as zero for symmetric rows.
const IMAG_TOLERANCE: f64 = 1e-12;

/// A circulant matrix stored as its first row together with its DFT
/// eigenvalues `γ_m = Σ_k c_k ω^{mk}`, `ω = e^{−2πi/d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantSpec {
    first_row: Vec<f64>,
    eigenvalues: Vec<Complex64>,
}

pub fn circulant_from_first_row(row: &[f64]) -> Result<CirculantSpec> {
    if row.is_empty() {
        return Err(Error::param("circulant first row is empty"));
    }
    Ok(CirculantSpec {
        first_row: row.to_vec(),
        eigenvalues: dft(row),
    })
}

// Plain O(d²) transform. Exponents are reduced mod d before forming the
// angle so the twiddles stay accurate for large m·k.
fn dft(row: &[f64]) -> Vec<Complex64> {
    let d = row.len();
    (0..d)
        .map(|m| {
            row.iter()
                .enumerate()
                .fold(Complex64::new(0.0, 0.0), |acc, (k, &c)| {
                    let angle = -2.0 * PI * ((m * k) % d) as f64 / d as f64;
                    acc + Complex64::from_polar(c, angle)
                })
        })
        .collect()
}

impl CirculantSpec {
    pub fn dim(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    /// DFT eigenvalues in frequency order `m = 0..d`.
    pub fn dft_eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Whether `c_k = c_{d−k}` for all `k`, up to `tol·max(1, max|c|)`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let d = self.dim();
        let scale = self
            .first_row
            .iter()
            .fold(1.0_f64, |acc, v| acc.max(v.abs()));
        (1..d).all(|k| (self.first_row[k] - self.first_row[d - k]).abs() <= tol * scale)
    }

    /// Row `i` is the first row cyclically shifted right by `i`:
    /// `C[i][j] = c_{(j − i) mod d}`.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.first_row[(j + d - i) % d])
    }

    /// Real spectrum of a symmetric circulant, descending.
    pub fn real_eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.is_symmetric(IMAG_TOLERANCE) {
            return Err(Error::Unsupported(
                "circulant row is not symmetric under index reflection; spectrum is complex"
                    .into(),
            ));
        }
        let mut vals: Vec<f64> = self.eigenvalues.iter().map(|z| z.re).collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        Ok(vals)
    }
}

pub fn circulant_eigenvalues(circ: &CirculantSpec) -> Result<Vec<f64>> {
    circ.real_eigenvalues()
}

/// Largest `|a[i][j] − a[(i+1) mod d][(j+1) mod d]|`; zero for an exact
/// circulant.
pub fn shift_invariance_defect(m: &DMatrix<f64>) -> f64 {
    let d = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in 0..m.ncols() {
            let next = m[((i + 1) % d, (j + 1) % m.ncols())];
            worst = worst.max((m[(i, j)] - next).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{build_soar, soar_first_row, CircleGrid};
    use crate::solvers::eigen::symmetric_eigenvalues;

    #[test]
    fn rejects_empty_row() {
        assert!(matches!(
            circulant_from_first_row(&[]),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn unit_row_is_identity() {
        let c = circulant_from_first_row(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(c.to_matrix(), DMatrix::<f64>::identity(4, 4));
        let vals = circulant_eigenvalues(&c).unwrap();
        assert!(vals.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn cyclic_shift_layout() {
        let c = circulant_from_first_row(&[2.0, 1.0, 0.0, 1.0]).unwrap();
        let m = c.to_matrix();
        let row1: Vec<f64> = m.row(1).iter().copied().collect();
        assert_eq!(row1, vec![1.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn hand_computed_dft() {
        // γ_m = 1 + cos(πm)
        let c = circulant_from_first_row(&[1.0, 0.5, 0.0, 0.5]).unwrap();
        let vals = circulant_eigenvalues(&c).unwrap();
        let expect = [2.0, 1.0, 1.0, 0.0];
        for (v, e) in vals.iter().zip(expect) {
            assert!((v - e).abs() < 1e-15, "{vals:?}");
        }
        assert!(c.dft_eigenvalues().iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn asymmetric_row_is_unsupported() {
        let c = circulant_from_first_row(&[1.0, 0.5, 0.0, 0.0]).unwrap();
        assert!(matches!(
            circulant_eigenvalues(&c),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn soar_row_materializes_to_soar_matrix() {
        let g = CircleGrid::new(16).unwrap();
        let c = circulant_from_first_row(&soar_first_row(&g, 0.3).unwrap()).unwrap();
        let m = build_soar(&g, 0.3).unwrap();
        assert_eq!(&c.to_matrix(), m.entries());
    }

    #[test]
    fn soar_dft_matches_dense() {
        let g = CircleGrid::new(64).unwrap();
        let c = circulant_from_first_row(&soar_first_row(&g, 0.2).unwrap()).unwrap();
        let dft = circulant_eigenvalues(&c).unwrap();
        let dense = symmetric_eigenvalues(&c.to_matrix()).unwrap();
        let scale = dense[0].abs();
        for (a, b) in dft.iter().zip(&dense) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn shift_defect_detects_toeplitz_block() {
        // leading block of a circulant is Toeplitz, not circulant
        let m = build_soar(&CircleGrid::new(16).unwrap(), 0.5).unwrap();
        let block = m.entries().view((0, 0), (8, 8)).into_owned();
        assert!(shift_invariance_defect(&block) > 1e-3);
    }
}
