//! Linear observation operators `H: R^n → R^p` stored as sparse rows.
//!
//! The canonical patterns are defined with 1-based indices on a grid with
//! `n = 2p`. Internally everything is 0-based: row `r` corresponds to
//! observation `i = r + 1` and column `c` to state variable `j = c + 1`.
//!
//! | kind                 | 1-based pattern                    | 0-based columns of row `r` |
//! |----------------------|------------------------------------|----------------------------|
//! | `FirstHalf` (H1)     | `j = i`                            | `r`                        |
//! | `Alternate` (H2)     | `j = 2i`                           | `2r + 1`                   |
//! | `SmoothedAlternate` (H3) | `j ∈ {2i−2,…,2i+2} mod n`, weight 1/5 | `2r−1 … 2r+3 (mod n)` |
//! | `RandomDirect` (H4)  | `p` distinct seeded columns        | sorted ascending           |
//!
//! A time-stacked operator for a multi-time window would be built as a
//! `Custom` operator over the stacked observation vector.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SMOOTHING_WIDTH: usize = 5;
const SMOOTHING_WEIGHT: f64 = 1.0 / SMOOTHING_WIDTH as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    #[serde(alias = "H1")]
    FirstHalf,
    #[serde(alias = "H2")]
    Alternate,
    #[serde(alias = "H3")]
    SmoothedAlternate,
    #[serde(alias = "H4")]
    RandomDirect,
    Custom,
}

impl OperatorKind {
    pub const CANONICAL: [OperatorKind; 4] = [
        OperatorKind::FirstHalf,
        OperatorKind::Alternate,
        OperatorKind::SmoothedAlternate,
        OperatorKind::RandomDirect,
    ];

    /// Short label used in output tables.
    pub fn label(self) -> &'static str {
        match self {
            OperatorKind::FirstHalf => "H1",
            OperatorKind::Alternate => "H2",
            OperatorKind::SmoothedAlternate => "H3",
            OperatorKind::RandomDirect => "H4",
            OperatorKind::Custom => "custom",
        }
    }

    /// Each row observes one state variable with unit weight.
    pub fn is_direct(self) -> bool {
        matches!(
            self,
            OperatorKind::FirstHalf | OperatorKind::Alternate | OperatorKind::RandomDirect
        )
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "h1" | "first-half" => Ok(OperatorKind::FirstHalf),
            "h2" | "alternate" => Ok(OperatorKind::Alternate),
            "h3" | "smoothed-alternate" => Ok(OperatorKind::SmoothedAlternate),
            "h4" | "random-direct" => Ok(OperatorKind::RandomDirect),
            "custom" => Ok(OperatorKind::Custom),
            other => Err(Error::param(format!("unknown operator kind '{other}'"))),
        }
    }
}

/// One sparse row: `(column, weight)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorDescription", into = "OperatorDescription")]
pub struct ObservationOperator {
    kind: OperatorKind,
    p: usize,
    n: usize,
    seed: Option<u64>,
    rows: Vec<SparseRow>,
}

/// Serialized form: enough to rebuild the operator bit-for-bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct OperatorDescription {
    kind: OperatorKind,
    p: usize,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    rows: Vec<SparseRow>,
}

impl From<ObservationOperator> for OperatorDescription {
    fn from(h: ObservationOperator) -> Self {
        OperatorDescription {
            kind: h.kind,
            p: h.p,
            n: h.n,
            seed: h.seed,
            rows: h.rows,
        }
    }
}

impl TryFrom<OperatorDescription> for ObservationOperator {
    type Error = Error;

    fn try_from(d: OperatorDescription) -> Result<Self> {
        if d.kind == OperatorKind::Custom {
            let h = ObservationOperator::custom(d.n, d.rows)?;
            if h.p != d.p {
                return Err(Error::param("row count does not match p"));
            }
            return Ok(h);
        }
        let rebuilt = make_operator(d.kind, d.p, d.n, d.seed)?;
        if rebuilt.rows != d.rows {
            return Err(Error::param(format!(
                "rows do not match the {} pattern for p={}, n={}",
                d.kind, d.p, d.n
            )));
        }
        Ok(rebuilt)
    }
}

fn check_dims(p: usize, n: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::param("observation count p must be positive"));
    }
    if p >= n {
        return Err(Error::param(format!(
            "need fewer observations than state variables, got p={p}, n={n}"
        )));
    }
    Ok(())
}

/// Builds one of the canonical operators. `seed` is required for
/// `RandomDirect` and ignored otherwise.
pub fn make_operator(
    kind: OperatorKind,
    p: usize,
    n: usize,
    seed: Option<u64>,
) -> Result<ObservationOperator> {
    if kind == OperatorKind::Custom {
        return Err(Error::param(
            "custom operators are built with ObservationOperator::custom",
        ));
    }
    if n != 2 * p {
        return Err(Error::param(format!(
            "canonical operators require n = 2p, got p={p}, n={n}"
        )));
    }
    check_dims(p, n)?;
    let rows: Vec<SparseRow> = match kind {
        OperatorKind::FirstHalf => (0..p).map(|r| vec![(r, 1.0)]).collect(),
        OperatorKind::Alternate => (0..p).map(|r| vec![(2 * r + 1, 1.0)]).collect(),
        OperatorKind::SmoothedAlternate => (0..p)
            .map(|r| {
                // centred on column 2r+1, i.e. 2r−1 … 2r+3 mod n
                (0..SMOOTHING_WIDTH)
                    .map(|a| ((2 * r + n + a - 1) % n, SMOOTHING_WEIGHT))
                    .collect()
            })
            .collect(),
        OperatorKind::RandomDirect => {
            let seed = seed.ok_or_else(|| {
                Error::param("random-direct operator requires a seed")
            })?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut cols = rand::seq::index::sample(&mut rng, n, p).into_vec();
            cols.sort_unstable();
            cols.into_iter().map(|c| vec![(c, 1.0)]).collect()
        }
        OperatorKind::Custom => unreachable!(),
    };
    let seed = if kind == OperatorKind::RandomDirect {
        seed
    } else {
        None
    };
    Ok(ObservationOperator {
        kind,
        p,
        n,
        seed,
        rows,
    })
}

impl ObservationOperator {
    /// An arbitrary sparse operator. Rows must be nonempty with in-range columns.
    pub fn custom(n: usize, rows: Vec<SparseRow>) -> Result<Self> {
        let p = rows.len();
        check_dims(p, n)?;
        for (r, row) in rows.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::param(format!("row {r} is empty")));
            }
            if let Some(&(c, _)) = row.iter().find(|(c, _)| *c >= n) {
                return Err(Error::param(format!(
                    "row {r} references column {c} outside [0, {n})"
                )));
            }
            if row.iter().any(|(_, w)| !w.is_finite()) {
                return Err(Error::param(format!("row {r} has a non-finite weight")));
            }
        }
        Ok(Self {
            kind: OperatorKind::Custom,
            p,
            n,
            seed: None,
            rows,
        })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    /// `y = H x`.
    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.n {
            return Err(Error::param(format!(
                "state vector has length {}, operator expects {}",
                x.len(),
                self.n
            )));
        }
        Ok(DVector::from_iterator(
            self.p,
            self.rows
                .iter()
                .map(|row| row.iter().map(|&(c, w)| w * x[c]).sum::<f64>()),
        ))
    }

    /// `x = Hᵀ y`.
    pub fn apply_transpose(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if y.len() != self.p {
            return Err(Error::param(format!(
                "observation vector has length {}, operator expects {}",
                y.len(),
                self.p
            )));
        }
        let mut x = DVector::zeros(self.n);
        for (row, &yr) in self.rows.iter().zip(y.iter()) {
            for &(c, w) in row {
                x[c] += w * yr;
            }
        }
        Ok(x)
    }

    /// `H M` for a dense `n × k` matrix `M`.
    pub fn mul_dense(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.nrows() != self.n {
            return Err(Error::param(format!(
                "matrix has {} rows, operator expects {}",
                m.nrows(),
                self.n
            )));
        }
        let mut out = DMatrix::zeros(self.p, m.ncols());
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, w) in row {
                for k in 0..m.ncols() {
                    out[(r, k)] += w * m[(c, k)];
                }
            }
        }
        Ok(out)
    }

    /// `H M Hᵀ` for a dense `n × n` matrix `M`.
    pub fn sandwich(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let hm = self.mul_dense(m)?;
        let mut out = DMatrix::zeros(self.p, self.p);
        for s in 0..self.p {
            for &(c, w) in &self.rows[s] {
                for r in 0..self.p {
                    out[(r, s)] += w * hm[(r, c)];
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.p, self.n);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, w) in row {
                m[(r, c)] += w;
            }
        }
        m
    }

    /// `H Hᵀ`.
    pub fn gram(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.p, self.p);
        for (r, row_r) in self.rows.iter().enumerate() {
            for (s, row_s) in self.rows.iter().enumerate().skip(r) {
                let mut acc = 0.0;
                for &(cr, wr) in row_r {
                    for &(cs, ws) in row_s {
                        if cr == cs {
                            acc += wr * ws;
                        }
                    }
                }
                g[(r, s)] = acc;
                g[(s, r)] = acc;
            }
        }
        g
    }
}
