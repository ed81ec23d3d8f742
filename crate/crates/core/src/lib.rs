//! Condition numbers of variational data assimilation Hessians with
//! correlated observation errors.
//!
//! The crate builds SOAR correlation matrices on a periodic circle grid,
//! pairs them with sparse observation operators, and analyses the resulting
//! preconditioned Hessian `Ŝ = I + B^{1/2} Hᵀ R⁻¹ H B^{1/2}`: its spectrum,
//! several families of condition-number bounds, and conjugate gradient
//! convergence on it.
//!
//! ```
//! use std::sync::Arc;
//! use dacond::{build_soar, make_operator, kappa_via_rank_p, CircleGrid, HessianModel, OperatorKind};
//!
//! let b = build_soar(&CircleGrid::new(40).unwrap(), 0.5).unwrap();
//! let r = build_soar(&CircleGrid::new(20).unwrap(), 0.3).unwrap();
//! let h = make_operator(OperatorKind::Alternate, 20, 40, None).unwrap();
//! let model = HessianModel::new(Arc::new(b), Arc::new(r), Arc::new(h)).unwrap();
//! assert!(kappa_via_rank_p(&model).unwrap() > 1.0);
//! ```

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod covariance;
pub mod error;
pub mod hessian;
pub mod obs;
pub mod solvers;

pub use bounds::{
    bounds_report, check_circulant_exactness, factored_bounds, general_bounds, haben_bounds,
    BoundsReport, ExactnessDiagnostics, FactoredBounds, GeneralBounds, HabenBounds,
};
pub use covariance::{
    build_soar, circulant_eigenvalues, circulant_from_first_row, spd_inverse, symmetric_sqrt,
    CircleGrid, CirculantSpec, CorrelationMatrix,
};
pub use error::{Error, Result};
pub use hessian::{
    assemble_preconditioned, assemble_unpreconditioned, kappa_via_rank_p, preconditioned_spectrum,
    preconditioned_spectrum_rank_p, spectrum, HessianModel, ModelDescriptor, SpectrumReport,
};
pub use obs::{make_operator, ObservationOperator, OperatorKind};
pub use solvers::{conjugate_gradient, make_test_signal, CgOptions, CgRunReport};
