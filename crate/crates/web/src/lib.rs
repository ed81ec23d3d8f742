//! wasm-bindgen bindings for the static page in `www/`.
//!
//! Each export takes plain numbers/strings and returns a JSON string, so the
//! page needs no generated type bindings. The `*_json` functions hold the
//! logic and are what the native tests exercise.

use std::sync::Arc;

use dacond::solvers::{solve_for_known_solution, SignalDescriptor};
use dacond::{
    bounds_report, build_soar, circulant_eigenvalues, circulant_from_first_row, kappa_via_rank_p,
    make_operator, make_test_signal, preconditioned_spectrum_rank_p, CgOptions, CircleGrid,
    HessianModel, OperatorKind,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Keeps dense eigensolves interactive in the browser.
pub const MAX_P: usize = 150;

type Out = Result<String, String>;

fn to_json<T: Serialize>(v: &T) -> Out {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn model(operator: &str, p: usize, lb: f64, lr: f64, seed: u64) -> Result<HessianModel, String> {
    if p == 0 || p > MAX_P {
        return Err(format!("p must be in 1..={MAX_P}"));
    }
    let kind: OperatorKind = operator.parse().map_err(|e: dacond::Error| e.to_string())?;
    let n = 2 * p;
    let b = CircleGrid::new(n).and_then(|g| build_soar(&g, lb));
    let r = CircleGrid::new(p).and_then(|g| build_soar(&g, lr));
    let h = make_operator(kind, p, n, Some(seed));
    let (b, r, h) = match (b, r, h) {
        (Ok(b), Ok(r), Ok(h)) => (b, r, h),
        (b, r, h) => {
            let msg = [b.err(), r.err(), h.err()]
                .into_iter()
                .flatten()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            return Err(msg);
        }
    };
    HessianModel::new(Arc::new(b), Arc::new(r), Arc::new(h)).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SoarSpectrum {
    n: usize,
    lengthscale: f64,
    eigenvalues: Vec<f64>,
    lambda_min: f64,
    lambda_max: f64,
    kappa: f64,
}

/// SOAR eigenvalues on an `n`-point circle via the DFT of the first row.
pub fn soar_spectrum_json(n: usize, lengthscale: f64) -> Out {
    if n > 4096 {
        return Err("n must be at most 4096".into());
    }
    let grid = CircleGrid::new(n).map_err(|e| e.to_string())?;
    let row = dacond::covariance::soar_first_row(&grid, lengthscale).map_err(|e| e.to_string())?;
    let circ = circulant_from_first_row(&row).map_err(|e| e.to_string())?;
    let eigenvalues = circulant_eigenvalues(&circ).map_err(|e| e.to_string())?;
    let lambda_max = eigenvalues[0];
    let lambda_min = *eigenvalues.last().expect("n >= 2");
    to_json(&SoarSpectrum {
        n,
        lengthscale,
        lambda_min,
        lambda_max,
        kappa: lambda_max / lambda_min,
        eigenvalues,
    })
}

#[derive(Serialize)]
struct CellAnalysis {
    bounds: dacond::BoundsReport,
    update_eigenvalues: Vec<f64>,
    distinct_cluster_count: usize,
}

/// Condition number, every bound, and the update spectrum for one cell.
pub fn analyze_cell_json(operator: &str, p: usize, lb: f64, lr: f64, seed: u64) -> Out {
    let m = model(operator, p, lb, lr, seed)?;
    let bounds = bounds_report(&m).map_err(|e| e.to_string())?;
    let report = preconditioned_spectrum_rank_p(&m, dacond::hessian::DEFAULT_CLUSTER_GAP)
        .map_err(|e| e.to_string())?;
    to_json(&CellAnalysis {
        bounds,
        update_eigenvalues: report.update_eigenvalues.unwrap_or_default(),
        distinct_cluster_count: report.distinct_cluster_count,
    })
}

#[derive(Serialize)]
struct CgTrace {
    kappa: f64,
    iterations: usize,
    converged: bool,
    solution_error: Option<f64>,
    relative_residual_trace: Vec<f64>,
}

/// CG on `Ŝx = Ŝx_test` with the default multi-scale test signal.
pub fn cg_trace_json(operator: &str, p: usize, lb: f64, lr: f64, seed: u64, tolerance: f64) -> Out {
    let m = model(operator, p, lb, lr, seed)?;
    let x = make_test_signal(m.n(), &SignalDescriptor::default())
        .map_err(|e| e.to_string())?
        .to_vector();
    let op = m.preconditioned_operator().map_err(|e| e.to_string())?;
    let options = CgOptions::for_dim(m.n()).with_tolerance(tolerance);
    let out = solve_for_known_solution(|v| op.apply(v), &x, &options).map_err(|e| e.to_string())?;
    to_json(&CgTrace {
        kappa: kappa_via_rank_p(&m).map_err(|e| e.to_string())?,
        iterations: out.report.iterations,
        converged: out.report.converged,
        solution_error: out.report.recovered_solution_error,
        relative_residual_trace: out.report.relative_residual_trace,
    })
}

fn js(r: Out) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn soar_spectrum(n: usize, lengthscale: f64) -> Result<String, JsValue> {
    js(soar_spectrum_json(n, lengthscale))
}

#[wasm_bindgen]
pub fn analyze_cell(operator: &str, p: usize, lb: f64, lr: f64, seed: u64) -> Result<String, JsValue> {
    js(analyze_cell_json(operator, p, lb, lr, seed))
}

#[wasm_bindgen]
pub fn cg_trace(
    operator: &str,
    p: usize,
    lb: f64,
    lr: f64,
    seed: u64,
    tolerance: f64,
) -> Result<String, JsValue> {
    js(cg_trace_json(operator, p, lb, lr, seed, tolerance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: Out) -> Value {
        serde_json::from_str(&s.unwrap()).unwrap()
    }

    #[test]
    fn soar_spectrum_is_descending() {
        let v = parse(soar_spectrum_json(64, 0.2));
        let e: Vec<f64> = serde_json::from_value(v["eigenvalues"].clone()).unwrap();
        assert_eq!(e.len(), 64);
        assert!(e.windows(2).all(|w| w[0] >= w[1]));
        assert!(v["kappa"].as_f64().unwrap() > 1.0);
        assert!(soar_spectrum_json(64, -1.0).is_err());
        assert!(soar_spectrum_json(1, 0.5).is_err());
    }

    #[test]
    fn cell_analysis_contains_bounds() {
        let v = parse(analyze_cell_json("H2", 20, 0.5, 0.3, 1));
        let k = v["bounds"]["kappa_exact"].as_f64().unwrap();
        assert!(v["bounds"]["haben"]["lower"].as_f64().unwrap() <= k * (1.0 + 1e-8));
        assert_eq!(v["update_eigenvalues"].as_array().unwrap().len(), 20);
        assert!(analyze_cell_json("H9", 20, 0.5, 0.3, 1).is_err());
        assert!(analyze_cell_json("H1", MAX_P + 1, 0.5, 0.3, 1).is_err());
    }

    #[test]
    fn cg_trace_converges() {
        let v = parse(cg_trace_json("smoothed-alternate", 30, 0.4, 0.4, 1, 1e-10));
        assert_eq!(v["converged"], true);
        let trace = v["relative_residual_trace"].as_array().unwrap();
        assert_eq!(trace.len(), v["iterations"].as_u64().unwrap() as usize);
        assert!(trace.last().unwrap().as_f64().unwrap() <= 1e-10);
        assert!(cg_trace_json("H1", 30, 0.4, 0.4, 1, 0.0).is_err());
    }
}
