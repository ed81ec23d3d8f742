use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use dacond::OperatorKind;
use dacond_experiments::output::{write_csv, write_json, write_jsonl, Header};
use dacond_experiments::sweeps::STATUS_OK;
use dacond_experiments::{
    parse_grid, run_bounds_sweep, run_cg_sweep, run_condition_sweep, run_spectrum_export,
    run_table1, SweepConfig, TABLE1_GRID,
};

#[derive(Parser)]
#[command(name = "dacond", version, about = "Condition numbers, bounds and CG sweeps for preconditioned 3D-Var Hessians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extreme eigenvalues of SOAR R and B per lengthscale
    Table1(Common),
    /// Condition number of the preconditioned Hessian over the grid
    SweepCond {
        #[command(flatten)]
        common: Common,
        /// Also compute κ of the unpreconditioned Hessian (dense n×n solve per cell)
        #[arg(long)]
        unpreconditioned: bool,
    },
    /// All bound families per grid cell
    SweepBounds(Common),
    /// CG iteration counts per grid cell
    SweepCg {
        #[command(flatten)]
        common: Common,
        /// Write residual histories to cg_traces.jsonl
        #[arg(long)]
        traces: bool,
    },
    /// Update eigenvalues for selected cells
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Cell as OP:LB:LR, e.g. H2:0.5:0.3 (repeatable)
        #[arg(long = "cell")]
        cells: Vec<String>,
    },
}

#[derive(Args)]
struct Common {
    /// State dimension
    #[arg(long)]
    n: Option<usize>,
    /// Observation count
    #[arg(long)]
    p: Option<usize>,
    /// Operator: H1..H4 or first-half, alternate, smoothed-alternate, random-direct (repeatable)
    #[arg(long = "operator")]
    operators: Vec<OperatorKind>,
    /// Background lengthscales: a,b,c or start:stop:step
    #[arg(long)]
    lb_grid: Option<String>,
    /// Observation lengthscales: a,b,c or start:stop:step
    #[arg(long)]
    lr_grid: Option<String>,
    /// Seed for the random operator
    #[arg(long)]
    seed: Option<u64>,
    /// CG relative residual tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Background variance
    #[arg(long)]
    sigma_b2: Option<f64>,
    /// Observation variance
    #[arg(long)]
    sigma_r2: Option<f64>,
    /// JSON config; keys present there override flags
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn resolve(&self, table1: bool) -> Result<SweepConfig> {
        let mut cfg = SweepConfig::default();
        if table1 {
            cfg.lb_grid = TABLE1_GRID.to_vec();
            cfg.lr_grid = TABLE1_GRID.to_vec();
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(p) = self.p {
            cfg.p = p;
        }
        if !self.operators.is_empty() {
            cfg.operators = self.operators.clone();
        }
        if let Some(g) = &self.lb_grid {
            cfg.lb_grid = parse_grid(g)?;
        }
        if let Some(g) = &self.lr_grid {
            cfg.lr_grid = parse_grid(g)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.tol {
            cfg.tolerance = t;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(v) = self.sigma_b2 {
            cfg.sigma_b2 = v;
        }
        if let Some(v) = self.sigma_r2 {
            cfg.sigma_r2 = v;
        }
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn report(path: &std::path::Path, total: usize, failed: usize) {
    println!("wrote {} ({total} rows, {failed} failed)", path.display());
}

fn count_failed<'a>(statuses: impl Iterator<Item = &'a str>) -> usize {
    statuses.filter(|s| *s != STATUS_OK).count()
}

/// Returns the number of failed cells.
fn run(cli: Cli) -> Result<usize> {
    match cli.command {
        Command::Table1(common) => {
            let cfg = common.resolve(true)?;
            let rows = run_table1(&cfg);
            let path = write_csv(&cfg.output_dir, "table1.csv", &Header::new("table1", &cfg), &rows)?;
            let failed = count_failed(rows.iter().map(|r| r.status.as_str()));
            report(&path, rows.len(), failed);
            Ok(failed)
        }
        Command::SweepCond { common, unpreconditioned } => {
            let cfg = common.resolve(false)?;
            let rows = run_condition_sweep(&cfg, unpreconditioned);
            let path = write_csv(&cfg.output_dir, "sweep_cond.csv", &Header::new("sweep-cond", &cfg), &rows)?;
            let failed = count_failed(rows.iter().map(|r| r.status.as_str()));
            report(&path, rows.len(), failed);
            Ok(failed)
        }
        Command::SweepBounds(common) => {
            let cfg = common.resolve(false)?;
            let rows = run_bounds_sweep(&cfg);
            let path = write_csv(&cfg.output_dir, "sweep_bounds.csv", &Header::new("sweep-bounds", &cfg), &rows)?;
            let failed = count_failed(rows.iter().map(|r| r.status.as_str()));
            report(&path, rows.len(), failed);
            Ok(failed)
        }
        Command::SweepCg { common, traces } => {
            let mut cfg = common.resolve(false)?;
            cfg.write_traces |= traces;
            let sweep = run_cg_sweep(&cfg);
            let path = write_csv(&cfg.output_dir, "sweep_cg.csv", &Header::new("sweep-cg", &cfg), &sweep.rows)?;
            write_json(&cfg.output_dir, "cg_signal.json", &sweep.signal)?;
            if cfg.write_traces {
                let t = write_jsonl(&cfg.output_dir, "cg_traces.jsonl", &sweep.traces)?;
                println!("wrote {}", t.display());
            }
            let failed = count_failed(sweep.rows.iter().map(|r| r.status.as_str()));
            report(&path, sweep.rows.len(), failed);
            Ok(failed)
        }
        Command::Spectrum { common, cells } => {
            let mut cfg = common.resolve(false)?;
            if !cells.is_empty() && cfg.cells.is_empty() {
                cfg.cells = cells;
            }
            let out = run_spectrum_export(&cfg)?;
            let doc = serde_json::json!({
                "header": Header::new("spectrum", &cfg),
                "cells": out,
            });
            let path = write_json(&cfg.output_dir, "spectrum.json", &doc)?;
            let failed = count_failed(out.iter().map(|c| c.status.as_str()));
            report(&path, out.len(), failed);
            Ok(failed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("{failed} cell(s) failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
