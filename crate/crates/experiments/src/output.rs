use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::SweepConfig;

/// Metadata written as a `#`-prefixed JSON line above every CSV body.
#[derive(Debug, Clone, Serialize)]
pub struct Header<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_hash: String,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
}

impl<'a> Header<'a> {
    pub fn new(command: &'a str, config: &SweepConfig) -> Self {
        Self {
            tool: "dacond",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash: config.config_hash(),
            seed: config.seed,
            n: config.n,
            p: config.p,
        }
    }
}

/// Header line plus CSV body, as bytes.
pub fn csv_bytes<T: Serialize>(header: &Header, rows: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(out, "# {}", serde_json::to_string(header)?)?;
    let mut w = csv::Writer::from_writer(&mut out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    drop(w);
    Ok(out)
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn write_csv<T: Serialize>(dir: &Path, name: &str, header: &Header, rows: &[T]) -> Result<PathBuf> {
    write_file(dir, name, &csv_bytes(header, rows)?)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_file(dir, name, &bytes)
}

/// One JSON value per line.
pub fn write_jsonl<T: Serialize>(dir: &Path, name: &str, items: &[T]) -> Result<PathBuf> {
    let mut bytes = Vec::new();
    for item in items {
        serde_json::to_writer(&mut bytes, item)?;
        bytes.push(b'\n');
    }
    write_file(dir, name, &bytes)
}
