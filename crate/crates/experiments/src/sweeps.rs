use std::collections::BTreeMap;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use dacond::bounds::SANDWICH_SLACK;
use dacond::solvers::{solve_for_known_solution, SignalDescriptor};
use dacond::{
    assemble_unpreconditioned, bounds_report, build_soar, kappa_via_rank_p, make_operator,
    make_test_signal, preconditioned_spectrum_rank_p, spectrum, CgOptions, CircleGrid,
    CorrelationMatrix, HessianModel, ObservationOperator, OperatorKind, SpectrumReport,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SweepConfig;

pub const STATUS_OK: &str = "ok";
pub const STATUS_ERROR: &str = "error";
pub const STATUS_NOT_CONVERGED: &str = "not-converged";

/// One `(operator, L_B, L_R)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub operator: OperatorKind,
    pub lb: f64,
    pub lr: f64,
}

impl std::str::FromStr for Cell {
    type Err = anyhow::Error;

    /// `OP:LB:LR`, e.g. `H2:0.5:0.3`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [op, lb, lr] = parts[..] else {
            bail!("cell '{s}' is not of the form OP:LB:LR");
        };
        let operator: OperatorKind = op.parse().with_context(|| format!("cell '{s}'"))?;
        if operator == OperatorKind::Custom {
            bail!("cell '{s}': custom operators are not addressable");
        }
        let lb: f64 = lb.trim().parse().with_context(|| format!("cell '{s}'"))?;
        let lr: f64 = lr.trim().parse().with_context(|| format!("cell '{s}'"))?;
        if !(lb > 0.0 && lr > 0.0) {
            bail!("cell '{s}': lengthscales must be positive");
        }
        Ok(Cell { operator, lb, lr })
    }
}

/// Grid cells in output order: operator label, then `L_B`, then `L_R`.
pub fn grid_cells(config: &SweepConfig) -> Vec<Cell> {
    let mut ops = config.operators.clone();
    ops.sort_by_key(|k| k.label());
    ops.dedup();
    let mut lbs = config.lb_grid.clone();
    let mut lrs = config.lr_grid.clone();
    for g in [&mut lbs, &mut lrs] {
        g.sort_by(f64::total_cmp);
        g.dedup();
    }
    let mut cells = Vec::with_capacity(ops.len() * lbs.len() * lrs.len());
    for &operator in &ops {
        for &lb in &lbs {
            for &lr in &lrs {
                cells.push(Cell { operator, lb, lr });
            }
        }
    }
    cells
}

type Cached<T> = std::result::Result<Arc<T>, String>;

/// Correlation matrices and operators shared between the cells of a sweep.
pub struct ModelCache {
    sigma_b2: f64,
    sigma_r2: f64,
    b: BTreeMap<u64, Cached<CorrelationMatrix>>,
    r: BTreeMap<u64, Cached<CorrelationMatrix>>,
    ops: BTreeMap<OperatorKind, Cached<ObservationOperator>>,
}

fn soar_cache(dim: usize, lengthscales: &[f64]) -> BTreeMap<u64, Cached<CorrelationMatrix>> {
    let grid = CircleGrid::new(dim);
    lengthscales
        .par_iter()
        .map(|&l| {
            let built = grid
                .clone()
                .and_then(|g| build_soar(&g, l))
                .map(|m| {
                    // warm the factorizations before cells share the matrix
                    m.sqrt();
                    m.inv_sqrt();
                    Arc::new(m)
                })
                .map_err(|e| format!("SOAR n={dim} L={l}: {e}"));
            (l.to_bits(), built)
        })
        .collect()
}

impl ModelCache {
    pub fn for_cells(config: &SweepConfig, cells: &[Cell]) -> Self {
        let mut lbs: Vec<f64> = cells.iter().map(|c| c.lb).collect();
        let mut lrs: Vec<f64> = cells.iter().map(|c| c.lr).collect();
        let mut kinds: Vec<OperatorKind> = cells.iter().map(|c| c.operator).collect();
        for g in [&mut lbs, &mut lrs] {
            g.sort_by(f64::total_cmp);
            g.dedup();
        }
        kinds.sort();
        kinds.dedup();
        let ops = kinds
            .into_iter()
            .map(|k| {
                let h = make_operator(k, config.p, config.n, Some(config.seed))
                    .map(Arc::new)
                    .map_err(|e| format!("operator {k}: {e}"));
                (k, h)
            })
            .collect();
        Self {
            sigma_b2: config.sigma_b2,
            sigma_r2: config.sigma_r2,
            b: soar_cache(config.n, &lbs),
            r: soar_cache(config.p, &lrs),
            ops,
        }
    }

    pub fn model(&self, cell: &Cell) -> Result<HessianModel> {
        let lookup = |map: &BTreeMap<u64, Cached<CorrelationMatrix>>, l: f64| {
            match map.get(&l.to_bits()) {
                Some(Ok(m)) => Ok(m.clone()),
                Some(Err(e)) => Err(anyhow::anyhow!(e.clone())),
                None => Err(anyhow::anyhow!("lengthscale {l} not in cache")),
            }
        };
        let b = lookup(&self.b, cell.lb)?;
        let r = lookup(&self.r, cell.lr)?;
        let h = match self.ops.get(&cell.operator) {
            Some(Ok(h)) => h.clone(),
            Some(Err(e)) => bail!(e.clone()),
            None => bail!("operator {} not in cache", cell.operator),
        };
        Ok(HessianModel::with_variances(
            b,
            r,
            h,
            self.sigma_b2,
            self.sigma_r2,
        )?)
    }
}

/// Columns shared by every per-cell row.
fn cell_columns(config: &SweepConfig, cell: &Cell) -> (String, f64, f64, usize, usize, f64, f64, Option<u64>) {
    let seed = (cell.operator == OperatorKind::RandomDirect).then_some(config.seed);
    (
        cell.operator.label().to_string(),
        cell.lb,
        cell.lr,
        config.n,
        config.p,
        config.sigma_b2.sqrt(),
        config.sigma_r2.sqrt(),
        seed,
    )
}

fn status_of<T>(r: &Result<T>) -> (String, String) {
    match r {
        Ok(_) => (STATUS_OK.into(), String::new()),
        Err(e) => (STATUS_ERROR.into(), format!("{e:#}")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub matrix: String,
    pub dim: usize,
    #[serde(rename = "L")]
    pub lengthscale: f64,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub status: String,
    pub error: String,
    pub config_hash: String,
}

/// Extreme eigenvalues of SOAR `R` (p×p, over `lr_grid`) and `B` (n×n, over `lb_grid`).
pub fn run_table1(config: &SweepConfig) -> Vec<Table1Row> {
    let hash = config.config_hash();
    let mut jobs: Vec<(&str, usize, f64)> = Vec::new();
    for (name, dim, grid) in [("R", config.p, &config.lr_grid), ("B", config.n, &config.lb_grid)] {
        let mut g = grid.clone();
        g.sort_by(f64::total_cmp);
        g.dedup();
        jobs.extend(g.into_iter().map(|l| (name, dim, l)));
    }
    jobs.par_iter()
        .map(|&(name, dim, l)| {
            let built = CircleGrid::new(dim)
                .and_then(|g| build_soar(&g, l))
                .map_err(anyhow::Error::from);
            let (status, error) = status_of(&built);
            let built = built.ok();
            Table1Row {
                matrix: name.to_string(),
                dim,
                lengthscale: l,
                lambda_min: built.as_ref().map(|m| m.lambda_min()),
                lambda_max: built.as_ref().map(|m| m.lambda_max()),
                status,
                error,
                config_hash: hash.clone(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub operator: String,
    pub lb: f64,
    pub lr: f64,
    pub n: usize,
    pub p: usize,
    pub sigma_b: f64,
    pub sigma_r: f64,
    pub seed: Option<u64>,
    pub kappa: Option<f64>,
    /// Only filled when requested; needs a dense n×n eigensolve per cell.
    pub kappa_unpreconditioned: Option<f64>,
    pub status: String,
    pub error: String,
    pub config_hash: String,
}

/// `κ(Ŝ)` over the grid via the p×p route.
pub fn run_condition_sweep(config: &SweepConfig, unpreconditioned: bool) -> Vec<ConditionRow> {
    let cells = grid_cells(config);
    let cache = ModelCache::for_cells(config, &cells);
    let hash = config.config_hash();
    cells
        .par_iter()
        .map(|cell| {
            let result = cache.model(cell).and_then(|m| {
                let k = kappa_via_rank_p(&m)?;
                let ku = if unpreconditioned {
                    let s = assemble_unpreconditioned(&m)?;
                    Some(spectrum(&s, config.cluster_gap)?.kappa)
                } else {
                    None
                };
                Ok((k, ku))
            });
            let (status, error) = status_of(&result);
            let (operator, lb, lr, n, p, sigma_b, sigma_r, seed) = cell_columns(config, cell);
            let (kappa, kappa_unpreconditioned) = match result {
                Ok((k, ku)) => (Some(k), ku),
                Err(_) => (None, None),
            };
            ConditionRow {
                operator,
                lb,
                lr,
                n,
                p,
                sigma_b,
                sigma_r,
                seed,
                kappa,
                kappa_unpreconditioned,
                status,
                error,
                config_hash: hash.clone(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundsRow {
    pub operator: String,
    pub lb: f64,
    pub lr: f64,
    pub n: usize,
    pub p: usize,
    pub sigma_b: f64,
    pub sigma_r: f64,
    pub seed: Option<u64>,
    pub kappa_exact: Option<f64>,
    pub general_lower_1: Option<f64>,
    pub general_lower_2: Option<f64>,
    pub general_lower_3: Option<f64>,
    pub general_upper_1: Option<f64>,
    pub general_upper_2: Option<f64>,
    pub factored_lower_1: Option<f64>,
    pub factored_lower_2: Option<f64>,
    pub factored_upper: Option<f64>,
    pub haben_lower: Option<f64>,
    pub haben_upper: Option<f64>,
    pub exactness_flag: Option<bool>,
    pub hbht_circulant_defect: Option<f64>,
    pub r_circulant_defect: Option<f64>,
    pub most_negative_entry: Option<f64>,
    pub general_sandwich: Option<bool>,
    pub factored_sandwich: Option<bool>,
    pub haben_sandwich: Option<bool>,
    pub status: String,
    pub error: String,
    pub config_hash: String,
}

/// Every bound family per grid cell.
pub fn run_bounds_sweep(config: &SweepConfig) -> Vec<BoundsRow> {
    let cells = grid_cells(config);
    let cache = ModelCache::for_cells(config, &cells);
    let hash = config.config_hash();
    cells
        .par_iter()
        .map(|cell| {
            let result = cache
                .model(cell)
                .and_then(|m| Ok(bounds_report(&m)?));
            let (status, error) = status_of(&result);
            let (operator, lb, lr, n, p, sigma_b, sigma_r, seed) = cell_columns(config, cell);
            let mut row = BoundsRow {
                operator,
                lb,
                lr,
                n,
                p,
                sigma_b,
                sigma_r,
                seed,
                status,
                error,
                config_hash: hash.clone(),
                ..BoundsRow::default()
            };
            if let Ok(rep) = result {
                let s = rep.sandwich(SANDWICH_SLACK);
                let [g1, g2, g3] = rep.general.lower_terms;
                let [u1, u2] = rep.general.upper_terms;
                let [f1, f2] = rep.factored.lower_terms;
                row.kappa_exact = Some(rep.kappa_exact);
                row.general_lower_1 = Some(g1);
                row.general_lower_2 = Some(g2);
                row.general_lower_3 = Some(g3);
                row.general_upper_1 = Some(u1);
                row.general_upper_2 = Some(u2);
                row.factored_lower_1 = Some(f1);
                row.factored_lower_2 = Some(f2);
                row.factored_upper = Some(rep.factored.upper);
                row.haben_lower = Some(rep.haben.lower);
                row.haben_upper = Some(rep.haben.upper);
                row.exactness_flag = Some(rep.exactness.exact);
                row.hbht_circulant_defect = Some(rep.exactness.hbht_circulant_defect);
                row.r_circulant_defect = Some(rep.exactness.r_circulant_defect);
                row.most_negative_entry = Some(rep.exactness.most_negative_entry);
                row.general_sandwich = Some(s.general);
                row.factored_sandwich = Some(s.factored);
                row.haben_sandwich = Some(s.haben);
            }
            row
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgRow {
    pub operator: String,
    pub lb: f64,
    pub lr: f64,
    pub n: usize,
    pub p: usize,
    pub sigma_b: f64,
    pub sigma_r: f64,
    pub seed: Option<u64>,
    pub tolerance: f64,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub final_residual: Option<f64>,
    pub solution_error: Option<f64>,
    pub kappa: Option<f64>,
    pub status: String,
    pub error: String,
    pub config_hash: String,
}

/// Residual history of one CG run, written to the trace sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgTrace {
    pub operator: String,
    pub lb: f64,
    pub lr: f64,
    pub relative_residual_trace: Vec<f64>,
}

pub struct CgSweep {
    pub rows: Vec<CgRow>,
    pub traces: Vec<CgTrace>,
    pub signal: SignalDescriptor,
}

/// Solves `Ŝx = Ŝx_test` matrix-free on every cell.
pub fn run_cg_sweep(config: &SweepConfig) -> CgSweep {
    let cells = grid_cells(config);
    let cache = ModelCache::for_cells(config, &cells);
    let hash = config.config_hash();
    let descriptor = SignalDescriptor::default();
    let x_true = make_test_signal(config.n, &descriptor).map(|s| s.to_vector());
    let options = CgOptions {
        tolerance: config.tolerance,
        max_iterations: config.max_iterations(),
        ..CgOptions::for_dim(config.n)
    };
    let (rows, traces) = cells
        .par_iter()
        .map(|cell| {
            let result = cache.model(cell).and_then(|m| {
                let x = x_true.clone()?;
                let op = m.preconditioned_operator()?;
                let out = solve_for_known_solution(|v| op.apply(v), &x, &options)?;
                Ok((out.report, kappa_via_rank_p(&m)?))
            });
            let (mut status, error) = status_of(&result);
            let (operator, lb, lr, n, p, sigma_b, sigma_r, seed) = cell_columns(config, cell);
            let mut row = CgRow {
                operator: operator.clone(),
                lb,
                lr,
                n,
                p,
                sigma_b,
                sigma_r,
                seed,
                tolerance: config.tolerance,
                iterations: None,
                converged: None,
                final_residual: None,
                solution_error: None,
                kappa: None,
                status: String::new(),
                error,
                config_hash: hash.clone(),
            };
            let mut trace = Vec::new();
            if let Ok((report, kappa)) = result {
                if !report.converged {
                    status = STATUS_NOT_CONVERGED.into();
                }
                row.iterations = Some(report.iterations);
                row.converged = Some(report.converged);
                row.final_residual = Some(report.final_relative_residual());
                row.solution_error = report.recovered_solution_error;
                row.kappa = Some(kappa);
                trace = report.relative_residual_trace;
            }
            row.status = status;
            let trace = CgTrace {
                operator,
                lb,
                lr,
                relative_residual_trace: trace,
            };
            (row, trace)
        })
        .unzip();
    CgSweep {
        rows,
        traces,
        signal: descriptor,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCell {
    pub cell: String,
    pub operator: String,
    pub lb: f64,
    pub lr: f64,
    pub status: String,
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<SpectrumReport>,
}

/// Spectra shown by default: every operator at `L_B ∈ {0.1, 0.5}` and
/// `L_R ∈ {0.2, 0.5, 1}`.
pub fn default_spectrum_cells() -> Vec<String> {
    let mut out = Vec::new();
    for k in OperatorKind::CANONICAL {
        for lb in [0.1, 0.5] {
            for lr in [0.2, 0.5, 1.0] {
                out.push(format!("{}:{lb}:{lr}", k.label()));
            }
        }
    }
    out
}

/// Update eigenvalues and cluster counts for explicit cells. Malformed
/// cell names fail the whole export.
pub fn run_spectrum_export(config: &SweepConfig) -> Result<Vec<SpectrumCell>> {
    let names = if config.cells.is_empty() {
        default_spectrum_cells()
    } else {
        config.cells.clone()
    };
    let cells: Vec<Cell> = names
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_>>()?;
    let cache = ModelCache::for_cells(config, &cells);
    Ok(names
        .par_iter()
        .zip(cells.par_iter())
        .map(|(name, cell)| {
            let result = cache
                .model(cell)
                .and_then(|m| Ok(preconditioned_spectrum_rank_p(&m, config.cluster_gap)?));
            let (status, error) = status_of(&result);
            SpectrumCell {
                cell: name.clone(),
                operator: cell.operator.label().to_string(),
                lb: cell.lb,
                lr: cell.lr,
                status,
                error,
                report: result.ok(),
            }
        })
        .collect())
}
