//! Preconditioned and unpreconditioned 3D-Var Hessians.
//!
//! With `B = σ_B²·B̃` and `R = σ_R²·R̃`, the preconditioned Hessian is
//!
//! ```text
//! Ŝ = I + B^{1/2} Hᵀ R⁻¹ H B^{1/2} = I + (σ_B²/σ_R²) · B̃^{1/2} Hᵀ R̃⁻¹ H B̃^{1/2}
//! ```
//!
//! Everything here is assembled from the correlation parts and the single
//! variance ratio, so a joint rescaling of both variances leaves every
//! assembled quantity bit-identical.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::covariance::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::obs::{ObservationOperator, OperatorKind};
use crate::solvers::eigen::{symmetric_eigenvalues, symmetrize};

/// Adjacent sorted eigenvalues closer than this relative gap share a cluster.
pub const DEFAULT_CLUSTER_GAP: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct HessianModel {
    b: Arc<CorrelationMatrix>,
    r: Arc<CorrelationMatrix>,
    h: Arc<ObservationOperator>,
    sigma_b2: f64,
    sigma_r2: f64,
}

/// Identifies a model in output tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub operator: String,
    pub lb: Option<f64>,
    pub lr: Option<f64>,
    pub n: usize,
    pub p: usize,
    pub sigma_b: f64,
    pub sigma_r: f64,
    pub seed: Option<u64>,
}

impl HessianModel {
    /// Unit variances.
    pub fn new(
        b: Arc<CorrelationMatrix>,
        r: Arc<CorrelationMatrix>,
        h: Arc<ObservationOperator>,
    ) -> Result<Self> {
        Self::with_variances(b, r, h, 1.0, 1.0)
    }

    pub fn with_variances(
        b: Arc<CorrelationMatrix>,
        r: Arc<CorrelationMatrix>,
        h: Arc<ObservationOperator>,
        sigma_b2: f64,
        sigma_r2: f64,
    ) -> Result<Self> {
        if b.dim() != h.n() {
            return Err(Error::param(format!(
                "B is {0}x{0} but H maps from dimension {1}",
                b.dim(),
                h.n()
            )));
        }
        if r.dim() != h.p() {
            return Err(Error::param(format!(
                "R is {0}x{0} but H has {1} rows",
                r.dim(),
                h.p()
            )));
        }
        if h.p() >= h.n() {
            return Err(Error::param("need p < n"));
        }
        for (name, v) in [("background", sigma_b2), ("observation", sigma_r2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!(
                    "{name} variance must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            b,
            r,
            h,
            sigma_b2,
            sigma_r2,
        })
    }

    pub fn n(&self) -> usize {
        self.h.n()
    }

    pub fn p(&self) -> usize {
        self.h.p()
    }

    pub fn b_correlation(&self) -> &CorrelationMatrix {
        &self.b
    }

    pub fn r_correlation(&self) -> &CorrelationMatrix {
        &self.r
    }

    pub fn operator(&self) -> &ObservationOperator {
        &self.h
    }

    pub fn sigma_b2(&self) -> f64 {
        self.sigma_b2
    }

    pub fn sigma_r2(&self) -> f64 {
        self.sigma_r2
    }

    /// `σ_B² / σ_R²`.
    pub fn variance_ratio(&self) -> f64 {
        self.sigma_b2 / self.sigma_r2
    }

    pub fn descriptor(&self) -> ModelDescriptor {
        ModelDescriptor {
            operator: self.h.kind().label().to_string(),
            lb: self.b.lengthscale(),
            lr: self.r.lengthscale(),
            n: self.n(),
            p: self.p(),
            sigma_b: self.sigma_b2.sqrt(),
            sigma_r: self.sigma_r2.sqrt(),
            seed: self.h.seed(),
        }
    }

    /// `B = σ_B² B̃`.
    pub fn b_matrix(&self) -> DMatrix<f64> {
        self.b.entries() * self.sigma_b2
    }

    /// `R = σ_R² R̃`.
    pub fn r_matrix(&self) -> DMatrix<f64> {
        self.r.entries() * self.sigma_r2
    }

    /// `H B̃ Hᵀ` (correlation part only).
    pub fn hbht_correlation(&self) -> DMatrix<f64> {
        let m = self
            .h
            .sandwich(self.b.entries())
            .expect("dimensions checked at construction");
        symmetrize(&m)
    }

    /// `H B Hᵀ`.
    pub fn hbht(&self) -> DMatrix<f64> {
        self.hbht_correlation() * self.sigma_b2
    }

    /// `R̃^{-1/2} H B̃ Hᵀ R̃^{-1/2}`; multiply by the variance ratio for the
    /// observation-space form of the update.
    pub fn observation_update_correlation(&self) -> DMatrix<f64> {
        let ris = self.r.inv_sqrt();
        symmetrize(&(ris * self.hbht_correlation() * ris))
    }

    /// `R^{-1/2} H B Hᵀ R^{-1/2}` (p×p). Shares its nonzero spectrum with the
    /// state-space update `B^{1/2} Hᵀ R⁻¹ H B^{1/2}`.
    pub fn observation_update(&self) -> DMatrix<f64> {
        self.observation_update_correlation() * self.variance_ratio()
    }

    /// `H B̃^{1/2}` (p×n).
    fn h_b_sqrt(&self) -> DMatrix<f64> {
        self.h
            .mul_dense(self.b.sqrt())
            .expect("dimensions checked at construction")
    }

    /// Matrix-free form of `Ŝ` for iterative solvers.
    pub fn preconditioned_operator(&self) -> Result<PreconditionedOperator> {
        let g = self.h_b_sqrt();
        let r_inv = self.r.inverse()?;
        Ok(PreconditionedOperator {
            g,
            r_inv,
            ratio: self.variance_ratio(),
        })
    }
}

/// Applies `x ↦ x + ρ·Gᵀ R̃⁻¹ G x` with `G = H B̃^{1/2}` and `ρ = σ_B²/σ_R²`.
#[derive(Debug, Clone)]
pub struct PreconditionedOperator {
    g: DMatrix<f64>,
    r_inv: DMatrix<f64>,
    ratio: f64,
}

impl PreconditionedOperator {
    pub fn dim(&self) -> usize {
        self.g.ncols()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let gx = &self.g * x;
        let w = &self.r_inv * gx;
        let mut out = self.g.tr_mul(&w);
        out *= self.ratio;
        out += x;
        out
    }
}

/// `Ŝ = I + B^{1/2} Hᵀ R⁻¹ H B^{1/2}`, symmetrized.
pub fn assemble_preconditioned(model: &HessianModel) -> Result<DMatrix<f64>> {
    let g = model.h_b_sqrt();
    let r_inv = model.r.inverse()?;
    let update = g.tr_mul(&(&r_inv * &g)) * model.variance_ratio();
    let n = model.n();
    Ok(symmetrize(&(DMatrix::identity(n, n) + update)))
}

/// `S = B⁻¹ + Hᵀ R⁻¹ H`, symmetrized.
pub fn assemble_unpreconditioned(model: &HessianModel) -> Result<DMatrix<f64>> {
    let b_inv = model.b.inverse()? / model.sigma_b2;
    let r_inv = model.r.inverse()? / model.sigma_r2;
    let hd = model.h.to_dense();
    let obs = hd.tr_mul(&(&r_inv * &hd));
    Ok(symmetrize(&(b_inv + obs)))
}

/// Condition number of `Ŝ` from the p×p observation-space product:
/// `κ(Ŝ) = 1 + λ_1(R⁻¹ H B Hᵀ)`, evaluated on the similar symmetric form.
pub fn kappa_via_rank_p(model: &HessianModel) -> Result<f64> {
    let vals = symmetric_eigenvalues(&model.observation_update_correlation())?;
    Ok(1.0 + model.variance_ratio() * vals[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// `λ_max / λ_min`.
    pub kappa: f64,
    pub distinct_cluster_count: usize,
    pub cluster_gap: f64,
    /// For preconditioned Hessians: the `p` eigenvalues of the low-rank
    /// update (Hessian eigenvalues minus one), descending.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub update_eigenvalues: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelDescriptor>,
}

/// Number of clusters in a sorted spectrum: a new cluster starts wherever
/// `|a − b| / max(|a|, |b|) ≥ gap` for adjacent values.
pub fn count_clusters(sorted: &[f64], gap: f64) -> usize {
    if sorted.is_empty() {
        return 0;
    }
    1 + sorted
        .windows(2)
        .filter(|w| {
            let scale = w[0].abs().max(w[1].abs());
            scale > 0.0 && (w[0] - w[1]).abs() / scale >= gap
        })
        .count()
}

/// Full spectrum and condition number of a symmetric positive definite matrix.
pub fn spectrum(matrix: &DMatrix<f64>, cluster_gap: f64) -> Result<SpectrumReport> {
    let eigenvalues = symmetric_eigenvalues(matrix)?;
    let min = *eigenvalues.last().expect("nonempty");
    if !(min > 0.0) {
        return Err(Error::Degenerate { min_eigenvalue: min });
    }
    let kappa = eigenvalues[0] / min;
    Ok(SpectrumReport {
        distinct_cluster_count: count_clusters(&eigenvalues, cluster_gap),
        kappa,
        eigenvalues,
        cluster_gap,
        update_eigenvalues: None,
        model: None,
    })
}

/// Spectrum of `Ŝ` built from the assembled n×n matrix, with the `p`
/// leading update eigenvalues reported separately.
pub fn preconditioned_spectrum(model: &HessianModel, cluster_gap: f64) -> Result<SpectrumReport> {
    let s_hat = assemble_preconditioned(model)?;
    let mut report = spectrum(&s_hat, cluster_gap)?;
    report.update_eigenvalues = Some(
        report.eigenvalues[..model.p()]
            .iter()
            .map(|v| v - 1.0)
            .collect(),
    );
    report.model = Some(model.descriptor());
    Ok(report)
}

/// Spectrum of `Ŝ` reconstructed from the p×p observation-space product:
/// `1 + λ_i` for the `p` update eigenvalues plus `n − p` unit eigenvalues.
/// Avoids the n×n eigenproblem.
pub fn preconditioned_spectrum_rank_p(
    model: &HessianModel,
    cluster_gap: f64,
) -> Result<SpectrumReport> {
    let ratio = model.variance_ratio();
    let update: Vec<f64> = symmetric_eigenvalues(&model.observation_update_correlation())?
        .into_iter()
        .map(|v| (v * ratio).max(0.0))
        .collect();
    let mut eigenvalues: Vec<f64> = update.iter().map(|v| 1.0 + v).collect();
    eigenvalues.extend(std::iter::repeat_n(1.0, model.n() - model.p()));
    let kappa = eigenvalues[0];
    Ok(SpectrumReport {
        distinct_cluster_count: count_clusters(&eigenvalues, cluster_gap),
        kappa,
        eigenvalues,
        cluster_gap,
        update_eigenvalues: Some(update),
        model: Some(model.descriptor()),
    })
}

/// True when every row of `h` is a single unit weight on distinct columns.
pub fn is_direct(h: &ObservationOperator) -> bool {
    if h.kind().is_direct() {
        return true;
    }
    if h.kind() != OperatorKind::Custom {
        return false;
    }
    let mut seen = std::collections::HashSet::new();
    h.rows()
        .iter()
        .all(|row| row.len() == 1 && row[0].1 == 1.0 && seen.insert(row[0].0))
}
