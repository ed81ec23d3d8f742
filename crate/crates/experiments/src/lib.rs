//! Sweeps over lengthscales and observation operators that regenerate the
//! eigenvalue table, condition-number surfaces, bound comparisons, CG
//! iteration counts and update spectra as CSV/JSON.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod sweeps;

pub use config::{default_lengthscale_grid, parse_grid, SweepConfig, TABLE1_GRID};
pub use sweeps::{
    grid_cells, run_bounds_sweep, run_cg_sweep, run_condition_sweep, run_spectrum_export,
    run_table1, BoundsRow, Cell, CgRow, CgSweep, ConditionRow, SpectrumCell, Table1Row,
};
