use std::sync::Arc;

use dacond::bounds::SANDWICH_SLACK;
use dacond::covariance::soar_first_row;
use dacond::solvers::symmetric_eigenvalues;
use dacond::{
    assemble_preconditioned, bounds_report, build_soar, circulant_eigenvalues,
    circulant_from_first_row, kappa_via_rank_p, make_operator, CircleGrid, HessianModel,
    OperatorKind,
};
use nalgebra::DVector;
use proptest::prelude::*;

fn kind_strategy() -> impl Strategy<Value = OperatorKind> {
    prop::sample::select(OperatorKind::CANONICAL.to_vec())
}

fn model(kind: OperatorKind, p: usize, lb: f64, lr: f64, seed: u64) -> HessianModel {
    let b = build_soar(&CircleGrid::new(2 * p).unwrap(), lb).unwrap();
    let r = build_soar(&CircleGrid::new(p).unwrap(), lr).unwrap();
    let h = make_operator(kind, p, 2 * p, Some(seed)).unwrap();
    HessianModel::new(Arc::new(b), Arc::new(r), Arc::new(h)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bounds_enclose_kappa(
        kind in kind_strategy(),
        p in 6usize..40,
        lb in 0.05f64..1.0,
        lr in 0.05f64..1.0,
        seed in any::<u64>(),
    ) {
        let rep = bounds_report(&model(kind, p, lb, lr, seed)).unwrap();
        let check = rep.sandwich(SANDWICH_SLACK);
        prop_assert!(check.all(), "{:?}", rep);
    }

    #[test]
    fn preconditioned_floor_is_one(
        kind in kind_strategy(),
        p in 4usize..30,
        lb in 0.05f64..1.0,
        lr in 0.05f64..1.0,
    ) {
        let m = model(kind, p, lb, lr, 7);
        let vals = symmetric_eigenvalues(&assemble_preconditioned(&m).unwrap()).unwrap();
        let floor = *vals.last().unwrap();
        prop_assert!((floor - 1.0).abs() <= 1e-10, "{}", floor);
        let k = kappa_via_rank_p(&m).unwrap();
        prop_assert!(((k - vals[0] / floor) / k).abs() <= 1e-8);
    }

    #[test]
    fn soar_spectrum_via_dft_matches_dense(n in 2usize..=128, l in 0.05f64..1.0) {
        let grid = CircleGrid::new(n).unwrap();
        let circ = circulant_from_first_row(&soar_first_row(&grid, l).unwrap()).unwrap();
        let dft = circulant_eigenvalues(&circ).unwrap();
        let dense = symmetric_eigenvalues(&circ.to_matrix()).unwrap();
        let scale = dense[0].abs();
        for (a, b) in dft.iter().zip(&dense) {
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn operator_apply_matches_dense(
        kind in kind_strategy(),
        p in 2usize..60,
        seed in any::<u64>(),
        xs in prop::collection::vec(-10.0f64..10.0, 120),
    ) {
        let h = make_operator(kind, p, 2 * p, Some(seed)).unwrap();
        let x = DVector::from_column_slice(&xs[..2 * p]);
        let sparse = h.apply(&x).unwrap();
        let dense = h.to_dense() * &x;
        let scale = dense.amax().max(1.0);
        prop_assert!((sparse - dense).amax() <= 1e-14 * scale);
    }

    #[test]
    fn joint_variance_scaling_leaves_hessian_unchanged(scale in 1e-3f64..1e3) {
        let b = Arc::new(build_soar(&CircleGrid::new(40).unwrap(), 0.3).unwrap());
        let r = Arc::new(build_soar(&CircleGrid::new(20).unwrap(), 0.5).unwrap());
        let h = Arc::new(make_operator(OperatorKind::SmoothedAlternate, 20, 40, None).unwrap());
        let base = HessianModel::new(b.clone(), r.clone(), h.clone()).unwrap();
        let scaled = HessianModel::with_variances(b, r, h, scale, scale).unwrap();
        let d = assemble_preconditioned(&base).unwrap() - assemble_preconditioned(&scaled).unwrap();
        prop_assert!(d.amax() <= 1e-12);
    }
}
