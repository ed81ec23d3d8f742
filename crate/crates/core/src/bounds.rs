//! Bounds on the condition number of the preconditioned Hessian.
//!
//! Three families are computed for a [`HessianModel`]:
//!
//! * general bounds built from `HBHᵀ`, `R`, `B` and `HᵀR⁻¹H`,
//! * factored bounds that only need the spectra of `B`, `R` and `HHᵀ`,
//! * row-sum bounds on `P = R^{-1/2} H B Hᵀ R^{-1/2}`, which coincide with
//!   the condition number when `P` is circulant with nonnegative entries.
//!
//! Every candidate term is reported separately so term-by-term comparisons
//! across a sweep stay possible.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::covariance::shift_invariance_defect;
use crate::error::Result;
use crate::hessian::{HessianModel, ModelDescriptor};
use crate::solvers::eigen::{max_abs, symmetric_eigenvalues, symmetrize};

/// Relative slack used when checking `lower ≤ κ ≤ upper`.
pub const SANDWICH_SLACK: f64 = 1e-8;
/// Relative shift-invariance tolerance for the circulant test.
pub const CIRCULANT_TOLERANCE: f64 = 1e-10;
/// Entries of `P` above this are treated as nonnegative.
pub const NEGATIVE_ENTRY_TOLERANCE: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralBounds {
    /// `1 + λ_1(HᵀR⁻¹H)·λ_n(B)`, `1 + λ_1(HBHᵀ)/λ_1(R)`, `1 + λ_p(HBHᵀ)/λ_p(R)`.
    pub lower_terms: [f64; 3],
    /// `1 + λ_1(B)·λ_1(HᵀR⁻¹H)`, `1 + λ_1(HBHᵀ)/λ_p(R)`.
    pub upper_terms: [f64; 2],
}

impl GeneralBounds {
    pub fn lower(&self) -> f64 {
        self.lower_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn upper(&self) -> f64 {
        self.upper_terms.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactoredBounds {
    /// `1 + λ_p(HHᵀ)·λ_n(B)/λ_p(R)`, `1 + λ_1(HHᵀ)·λ_n(B)/λ_1(R)`.
    pub lower_terms: [f64; 2],
    /// `1 + λ_1(B)·λ_1(HHᵀ)/λ_p(R)`.
    pub upper: f64,
}

impl FactoredBounds {
    pub fn lower(&self) -> f64 {
        self.lower_terms[0].max(self.lower_terms[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HabenBounds {
    /// `1 + (1/p)·Σ_ij P_ij`.
    pub lower: f64,
    /// `1 + max_i Σ_j |P_ij|`.
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactnessDiagnostics {
    /// Shift-invariance defect of `HBHᵀ`, relative to `max(1, max|entry|)`.
    pub hbht_circulant_defect: f64,
    /// Same measure for `R`.
    pub r_circulant_defect: f64,
    /// Smallest entry of `P`.
    pub most_negative_entry: f64,
    pub hbht_circulant: bool,
    pub r_circulant: bool,
    pub nonnegative: bool,
    /// All three conditions hold, so the row-sum bounds are exact.
    pub exact: bool,
}

/// Every bound for one model, alongside the exact condition number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub model: ModelDescriptor,
    pub kappa_exact: f64,
    pub general: GeneralBounds,
    pub factored: FactoredBounds,
    pub haben: HabenBounds,
    pub exactness: ExactnessDiagnostics,
}

/// Which bound families enclose `κ` within the relative slack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SandwichCheck {
    pub general: bool,
    pub factored: bool,
    pub haben: bool,
}

impl SandwichCheck {
    pub fn all(&self) -> bool {
        self.general && self.factored && self.haben
    }
}

fn within(lower: f64, value: f64, upper: f64, slack: f64) -> bool {
    let tol = slack * value.abs().max(1.0);
    lower <= value + tol && value <= upper + tol
}

impl BoundsReport {
    pub fn sandwich(&self, slack: f64) -> SandwichCheck {
        let k = self.kappa_exact;
        SandwichCheck {
            general: within(self.general.lower(), k, self.general.upper(), slack),
            factored: within(self.factored.lower(), k, self.factored.upper, slack),
            haben: within(self.haben.lower, k, self.haben.upper, slack),
        }
    }
}

/// Spectral ingredients shared by the three families. All quantities carry
/// the variances.
struct Ingredients {
    b_max: f64,
    b_min: f64,
    r_max: f64,
    r_min: f64,
    hbht: Vec<f64>,
    hh: Vec<f64>,
    /// `λ_1(HᵀR⁻¹H)`.
    htrh_max: f64,
}

fn ingredients(model: &HessianModel) -> Result<Ingredients> {
    let sb = model.sigma_b2();
    let sr = model.sigma_r2();
    let b = model.b_correlation();
    let r = model.r_correlation();
    let hbht: Vec<f64> = symmetric_eigenvalues(&model.hbht_correlation())?
        .into_iter()
        .map(|v| v * sb)
        .collect();
    let gram = model.operator().gram();
    let hh = symmetric_eigenvalues(&gram)?;
    // HᵀR⁻¹H shares its nonzero spectrum with R^{-1/2}HHᵀR^{-1/2}.
    let ris = r.inv_sqrt();
    let similar = symmetrize(&(ris * &gram * ris));
    let htrh_max = symmetric_eigenvalues(&similar)?[0] / sr;
    Ok(Ingredients {
        b_max: b.lambda_max() * sb,
        b_min: b.lambda_min() * sb,
        r_max: r.lambda_max() * sr,
        r_min: r.lambda_min() * sr,
        hbht,
        hh,
        htrh_max,
    })
}

fn general_from(ing: &Ingredients) -> GeneralBounds {
    let hbht_max = ing.hbht[0];
    let hbht_min = *ing.hbht.last().expect("p > 0");
    GeneralBounds {
        lower_terms: [
            1.0 + ing.htrh_max * ing.b_min,
            1.0 + hbht_max / ing.r_max,
            1.0 + hbht_min / ing.r_min,
        ],
        upper_terms: [1.0 + ing.b_max * ing.htrh_max, 1.0 + hbht_max / ing.r_min],
    }
}

fn factored_from(ing: &Ingredients) -> FactoredBounds {
    let hh_max = ing.hh[0];
    let hh_min = *ing.hh.last().expect("p > 0");
    FactoredBounds {
        lower_terms: [
            1.0 + hh_min * ing.b_min / ing.r_min,
            1.0 + hh_max * ing.b_min / ing.r_max,
        ],
        upper: 1.0 + ing.b_max * hh_max / ing.r_min,
    }
}

fn haben_from(p_matrix: &DMatrix<f64>) -> HabenBounds {
    let p = p_matrix.nrows() as f64;
    let max_row = p_matrix
        .row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    HabenBounds {
        lower: 1.0 + p_matrix.sum() / p,
        upper: 1.0 + max_row,
    }
}

fn relative_defect(m: &DMatrix<f64>) -> f64 {
    shift_invariance_defect(m) / max_abs(m).max(1.0)
}

fn exactness_from(model: &HessianModel, p_matrix: &DMatrix<f64>) -> ExactnessDiagnostics {
    let hbht_circulant_defect = relative_defect(&model.hbht());
    let r_circulant_defect = relative_defect(&model.r_matrix());
    let most_negative_entry = p_matrix.min();
    let hbht_circulant = hbht_circulant_defect <= CIRCULANT_TOLERANCE;
    let r_circulant = r_circulant_defect <= CIRCULANT_TOLERANCE;
    let nonnegative = most_negative_entry >= NEGATIVE_ENTRY_TOLERANCE;
    ExactnessDiagnostics {
        hbht_circulant_defect,
        r_circulant_defect,
        most_negative_entry,
        hbht_circulant,
        r_circulant,
        nonnegative,
        exact: hbht_circulant && r_circulant && nonnegative,
    }
}

pub fn general_bounds(model: &HessianModel) -> Result<GeneralBounds> {
    Ok(general_from(&ingredients(model)?))
}

pub fn factored_bounds(model: &HessianModel) -> Result<FactoredBounds> {
    Ok(factored_from(&ingredients(model)?))
}

pub fn haben_bounds(model: &HessianModel) -> Result<HabenBounds> {
    Ok(haben_from(&model.observation_update()))
}

/// Tests whether `HBHᵀ` and `R` are circulant and `P` is entrywise
/// nonnegative. When all hold, the row-sum bounds equal `κ`.
pub fn check_circulant_exactness(model: &HessianModel) -> ExactnessDiagnostics {
    exactness_from(model, &model.observation_update())
}

/// All bounds plus the exact `κ`, computed from one pass over the spectra.
pub fn bounds_report(model: &HessianModel) -> Result<BoundsReport> {
    let ing = ingredients(model)?;
    let p_matrix = model.observation_update();
    let kappa_exact = 1.0 + symmetric_eigenvalues(&p_matrix)?[0];
    Ok(BoundsReport {
        model: model.descriptor(),
        kappa_exact,
        general: general_from(&ing),
        factored: factored_from(&ing),
        haben: haben_from(&p_matrix),
        exactness: exactness_from(model, &p_matrix),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{build_soar, CircleGrid, CorrelationMatrix};
    use crate::hessian::kappa_via_rank_p;
    use crate::obs::{make_operator, OperatorKind};
    use std::sync::Arc;

    fn model(kind: OperatorKind, p: usize, lb: f64, lr: f64) -> HessianModel {
        let b = build_soar(&CircleGrid::new(2 * p).unwrap(), lb).unwrap();
        let r = build_soar(&CircleGrid::new(p).unwrap(), lr).unwrap();
        let h = make_operator(kind, p, 2 * p, Some(42)).unwrap();
        HessianModel::new(Arc::new(b), Arc::new(r), Arc::new(h)).unwrap()
    }

    #[test]
    fn identity_case_collapses_to_two() {
        for kind in [OperatorKind::FirstHalf, OperatorKind::Alternate, OperatorKind::RandomDirect] {
            let m = HessianModel::new(
                Arc::new(CorrelationMatrix::identity(8).unwrap()),
                Arc::new(CorrelationMatrix::identity(4).unwrap()),
                Arc::new(make_operator(kind, 4, 8, Some(3)).unwrap()),
            )
            .unwrap();
            let rep = bounds_report(&m).unwrap();
            for t in rep.general.lower_terms.iter().chain(&rep.general.upper_terms) {
                assert!((t - 2.0).abs() < 1e-12);
            }
            assert!((rep.factored.lower() - 2.0).abs() < 1e-12);
            assert!((rep.factored.upper - 2.0).abs() < 1e-12);
            assert!((rep.haben.lower - 2.0).abs() < 1e-12);
            assert!((rep.haben.upper - 2.0).abs() < 1e-12);
            assert!((rep.kappa_exact - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sandwich_alternate_mid_grid() {
        let m = model(OperatorKind::Alternate, 100, 0.5, 0.2);
        let rep = bounds_report(&m).unwrap();
        assert!(rep.sandwich(SANDWICH_SLACK).all(), "{rep:?}");
        let k = kappa_via_rank_p(&m).unwrap();
        assert!(((rep.kappa_exact - k) / k).abs() < 1e-12);
    }

    #[test]
    fn degenerate_background_lower_term_near_one() {
        for lr in [0.1, 0.2, 0.3] {
            let g = general_bounds(&model(OperatorKind::Alternate, 100, 1.0, lr)).unwrap();
            assert!(g.lower_terms[0] - 1.0 < 1e-2, "{g:?}");
            assert!(g.lower_terms[0] < g.lower_terms[1]);
        }
    }

    #[test]
    fn direct_operator_factored_lower_ordering() {
        for (lb, lr) in [(0.2, 0.8), (0.7, 0.1), (0.5, 0.5)] {
            let f = factored_bounds(&model(OperatorKind::RandomDirect, 50, lb, lr)).unwrap();
            assert!(f.lower_terms[0] >= f.lower_terms[1]);
        }
    }

    #[test]
    fn factored_lower_beats_row_sum_lower_in_small_lb_large_lr_regime() {
        let m = model(OperatorKind::Alternate, 100, 0.1, 1.0);
        let f = factored_bounds(&m).unwrap();
        let h = haben_bounds(&m).unwrap();
        assert!(f.lower_terms[0] > h.lower, "{f:?} {h:?}");
    }

    #[test]
    fn row_sum_bounds_exact_for_alternate_when_lb_exceeds_lr() {
        let m = model(OperatorKind::Alternate, 100, 0.5, 0.3);
        let rep = bounds_report(&m).unwrap();
        assert!(rep.exactness.exact, "{:?}", rep.exactness);
        let k = rep.kappa_exact;
        assert!((rep.haben.upper - rep.haben.lower).abs() <= 1e-8 * k);
        assert!((rep.haben.upper - k).abs() <= 1e-8 * k);
    }

    #[test]
    fn first_half_is_not_circulant() {
        let m = model(OperatorKind::FirstHalf, 8, 0.5, 0.3);
        let d = check_circulant_exactness(&m);
        assert!(!d.hbht_circulant && !d.exact, "{d:?}");
        assert!(d.r_circulant);
    }

    #[test]
    fn negative_entries_can_break_exactness() {
        let m = model(OperatorKind::Alternate, 100, 0.9, 0.1);
        let d = check_circulant_exactness(&m);
        assert!(d.hbht_circulant);
        if !d.nonnegative {
            assert!(!d.exact && d.most_negative_entry < NEGATIVE_ENTRY_TOLERANCE);
        }
    }

    #[test]
    fn factored_never_tighter_than_general() {
        for kind in OperatorKind::CANONICAL {
            for (lb, lr) in [(0.1, 0.9), (0.5, 0.5), (0.9, 0.2)] {
                let rep = bounds_report(&model(kind, 40, lb, lr)).unwrap();
                assert!(rep.factored.upper >= rep.general.upper() - 1e-10 * rep.general.upper());
                assert!(rep.factored.lower() <= rep.general.lower() + 1e-10 * rep.general.lower());
            }
        }
    }

    #[test]
    fn variances_enter_bounds() {
        let b = Arc::new(build_soar(&CircleGrid::new(40).unwrap(), 0.3).unwrap());
        let r = Arc::new(build_soar(&CircleGrid::new(20).unwrap(), 0.4).unwrap());
        let h = Arc::new(make_operator(OperatorKind::SmoothedAlternate, 20, 40, None).unwrap());
        let m = HessianModel::with_variances(b, r, h, 2.0, 0.5).unwrap();
        let rep = bounds_report(&m).unwrap();
        assert!(rep.sandwich(SANDWICH_SLACK).all(), "{rep:?}");
        assert!(((rep.kappa_exact - kappa_via_rank_p(&m).unwrap()) / rep.kappa_exact).abs() < 1e-12);
    }
}
