use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dacond::OperatorKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Lengthscales used for the eigenvalue table.
pub const TABLE1_GRID: [f64; 5] = [0.1, 0.33, 0.66, 0.99, 1.0];

/// `0.05, 0.10, …, 1.00`.
pub fn default_lengthscale_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub n: usize,
    pub p: usize,
    pub lb_grid: Vec<f64>,
    pub lr_grid: Vec<f64>,
    pub operators: Vec<OperatorKind>,
    /// Seed for the random-direct operator.
    pub seed: u64,
    /// CG relative-residual tolerance.
    pub tolerance: f64,
    /// CG budget; `None` means `5n`.
    pub max_iterations: Option<usize>,
    pub sigma_b2: f64,
    pub sigma_r2: f64,
    pub cluster_gap: f64,
    /// Cells for the spectrum export, as `OP:LB:LR`.
    pub cells: Vec<String>,
    /// Write per-iteration CG residuals to a sidecar file.
    pub write_traces: bool,
    pub output_dir: PathBuf,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n: 200,
            p: 100,
            lb_grid: default_lengthscale_grid(),
            lr_grid: default_lengthscale_grid(),
            operators: OperatorKind::CANONICAL.to_vec(),
            seed: 42,
            tolerance: 1e-10,
            max_iterations: None,
            sigma_b2: 1.0,
            sigma_r2: 1.0,
            cluster_gap: dacond::hessian::DEFAULT_CLUSTER_GAP,
            cells: Vec::new(),
            write_traces: false,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.p >= self.n {
            bail!("need 0 < p < n, got p={}, n={}", self.p, self.n);
        }
        if self.operators.iter().any(|k| *k != OperatorKind::Custom) && self.n != 2 * self.p {
            bail!("canonical operators need n = 2p, got n={}, p={}", self.n, self.p);
        }
        if self.operators.contains(&OperatorKind::Custom) {
            bail!("custom operators cannot be swept from a config");
        }
        if self.operators.is_empty() {
            bail!("no operators selected");
        }
        for (name, grid) in [("lb_grid", &self.lb_grid), ("lr_grid", &self.lr_grid)] {
            if grid.is_empty() {
                bail!("{name} is empty");
            }
            if let Some(l) = grid.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
                bail!("{name} contains non-positive lengthscale {l}");
            }
        }
        if !(self.tolerance > 0.0) {
            bail!("tolerance must be positive");
        }
        if !(self.sigma_b2 > 0.0 && self.sigma_r2 > 0.0) {
            bail!("variances must be positive");
        }
        if !(self.cluster_gap > 0.0) {
            bail!("cluster_gap must be positive");
        }
        Ok(())
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iterations.unwrap_or(5 * self.n)
    }

    /// SHA-256 of the canonical JSON form, ignoring keys that only affect
    /// where or how much is written. First 16 hex digits.
    pub fn config_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("output_dir");
            obj.remove("write_traces");
        }
        let digest = Sha256::digest(value.to_string().as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    /// Overlays every key present in the JSON object at `path`.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        self.apply_json(&text)
            .with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn apply_json(&mut self, text: &str) -> Result<()> {
        let overlay: serde_json::Value = serde_json::from_str(text)?;
        let Some(overlay) = overlay.as_object() else {
            bail!("config must be a JSON object");
        };
        let mut base = serde_json::to_value(&*self)?;
        let obj = base.as_object_mut().expect("config is an object");
        for (k, v) in overlay {
            if k == "lb_grid" || k == "lr_grid" {
                if let Some(s) = v.as_str() {
                    obj.insert(k.clone(), serde_json::to_value(parse_grid(s)?)?);
                    continue;
                }
            }
            obj.insert(k.clone(), v.clone());
        }
        *self = serde_json::from_value(base)?;
        Ok(())
    }
}

/// Parses `a,b,c` or `start:stop:step` (inclusive of `stop` within 1e-9).
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("bad range '{text}'"))?;
        let [start, stop, step] = parts[..] else {
            bail!("range must be start:stop:step, got '{text}'");
        };
        if !(step > 0.0) || stop < start {
            bail!("range '{text}' is empty or has a non-positive step");
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // round to 12 decimals so 0.05-steps read back as written
        return Ok((0..count)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect());
    }
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("bad lengthscale '{s}'"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_is_twenty_steps() {
        let g = default_lengthscale_grid();
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[19], 1.0);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0.1, 0.5,1").unwrap(), vec![0.1, 0.5, 1.0]);
        assert_eq!(parse_grid("0.05:1:0.05").unwrap(), default_lengthscale_grid());
        assert_eq!(parse_grid("0.1:0.3:0.1").unwrap(), vec![0.1, 0.2, 0.3]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn round_trip_and_hash() {
        let c = SweepConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        let back: SweepConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.config_hash(), c.config_hash());

        let mut moved = c.clone();
        moved.output_dir = PathBuf::from("elsewhere");
        assert_eq!(moved.config_hash(), c.config_hash());
        moved.seed = 7;
        assert_ne!(moved.config_hash(), c.config_hash());
    }

    #[test]
    fn overlay_overrides_present_keys_only() {
        let mut c = SweepConfig::default();
        c.apply_json(r#"{"seed": 9, "lb_grid": "0.1:0.2:0.1", "operators": ["H2", "random-direct"]}"#)
            .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.lb_grid, vec![0.1, 0.2]);
        assert_eq!(c.operators, vec![OperatorKind::Alternate, OperatorKind::RandomDirect]);
        assert_eq!(c.n, 200);
        assert!(c.apply_json(r#"{"bogus": 1}"#).is_err());
        assert!(c.apply_json("[1]").is_err());
    }

    #[test]
    fn validation() {
        assert!(SweepConfig::default().validate().is_ok());
        let bad = SweepConfig { p: 90, ..SweepConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SweepConfig { lr_grid: vec![0.0], ..SweepConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SweepConfig { operators: vec![], ..SweepConfig::default() };
        assert!(bad.validate().is_err());
    }
}
