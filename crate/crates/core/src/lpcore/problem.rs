use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::LpError;

/// Bounds at or beyond this magnitude are treated as infinite.
pub const INFINITY_THRESHOLD: f64 = 1e30;

pub(crate) fn is_neg_inf(v: f64) -> bool {
    v <= -INFINITY_THRESHOLD
}

pub(crate) fn is_pos_inf(v: f64) -> bool {
    v >= INFINITY_THRESHOLD
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowSense {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl fmt::Display for RowSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowSense::Eq => "=",
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// A sparse linear program in minimization form.
///
/// Each row reads `lo <= a_r . x <= hi`, where the interval is derived from
/// `row_sense`, `rhs` and the optional MPS-style `row_range`. Duplicate
/// triplets are summed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub name: String,
    pub n_cols: usize,
    pub n_rows: usize,
    pub objective: Vec<f64>,
    pub matrix: Vec<Triplet>,
    pub row_sense: Vec<RowSense>,
    pub rhs: Vec<f64>,
    pub row_range: Vec<Option<f64>>,
    pub col_lower: Vec<f64>,
    pub col_upper: Vec<f64>,
    pub binary_cols: BTreeSet<usize>,
    pub row_names: Option<Vec<String>>,
    pub col_names: Option<Vec<String>>,
}

impl LpProblem {
    pub fn new(name: impl Into<String>) -> Self {
        LpProblem {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Adds a column and returns its index.
    pub fn add_col(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.col_lower.push(lower);
        self.col_upper.push(upper);
        if let Some(names) = &mut self.col_names {
            names.push(format!("C{:04}", self.n_cols + 1));
        }
        self.n_cols += 1;
        self.n_cols - 1
    }

    pub fn add_binary_col(&mut self, cost: f64) -> usize {
        let col = self.add_col(cost, 0.0, 1.0);
        self.binary_cols.insert(col);
        col
    }

    /// Adds a row `coeffs . x (sense) rhs` and returns its index.
    pub fn add_row(&mut self, sense: RowSense, rhs: f64, coeffs: &[(usize, f64)]) -> usize {
        let row = self.n_rows;
        for &(col, value) in coeffs {
            if value != 0.0 {
                self.matrix.push(Triplet { row, col, value });
            }
        }
        self.row_sense.push(sense);
        self.rhs.push(rhs);
        self.row_range.push(None);
        if let Some(names) = &mut self.row_names {
            names.push(format!("R{:04}", row + 1));
        }
        self.n_rows += 1;
        row
    }

    pub fn set_col_name(&mut self, col: usize, name: impl Into<String>) {
        let n = self.n_cols;
        let names = self
            .col_names
            .get_or_insert_with(|| (1..=n).map(|i| format!("C{i:04}")).collect());
        names[col] = name.into();
    }

    pub fn set_row_name(&mut self, row: usize, name: impl Into<String>) {
        let n = self.n_rows;
        let names = self
            .row_names
            .get_or_insert_with(|| (1..=n).map(|i| format!("R{i:04}")).collect());
        names[row] = name.into();
    }

    pub fn col_name(&self, col: usize) -> String {
        match &self.col_names {
            Some(names) => names[col].clone(),
            None => format!("C{:04}", col + 1),
        }
    }

    pub fn row_name(&self, row: usize) -> String {
        match &self.row_names {
            Some(names) => names[row].clone(),
            None => format!("R{:04}", row + 1),
        }
    }

    /// Lower and upper activity limits of a row.
    pub fn row_bounds(&self, row: usize) -> (f64, f64) {
        let rhs = self.rhs[row];
        match (self.row_sense[row], self.row_range[row]) {
            (RowSense::Eq, None) => (rhs, rhs),
            (RowSense::Le, None) => (f64::NEG_INFINITY, rhs),
            (RowSense::Ge, None) => (rhs, f64::INFINITY),
            (RowSense::Eq, Some(r)) if r >= 0.0 => (rhs, rhs + r),
            (RowSense::Eq, Some(r)) => (rhs + r, rhs),
            (RowSense::Le, Some(r)) => (rhs - r.abs(), rhs),
            (RowSense::Ge, Some(r)) => (rhs, rhs + r.abs()),
        }
    }

    /// Objective value at `point`.
    pub fn objective_at(&self, point: &[f64]) -> f64 {
        self.objective.iter().zip(point).map(|(c, x)| c * x).sum()
    }

    /// Row activities `A x`.
    pub fn row_activity(&self, point: &[f64]) -> Vec<f64> {
        let mut act = vec![0.0; self.n_rows];
        for t in &self.matrix {
            act[t.row] += t.value * point[t.col];
        }
        act
    }

    /// Checks structural invariants: dimensions, index ranges, finite data,
    /// ordered bounds and binary bounds within [0, 1].
    pub fn validate(&self) -> Result<(), LpError> {
        let malformed = |msg: String| Err(LpError::Malformed(msg));
        if self.objective.len() != self.n_cols
            || self.col_lower.len() != self.n_cols
            || self.col_upper.len() != self.n_cols
        {
            return malformed("column vectors disagree with n_cols".into());
        }
        if self.row_sense.len() != self.n_rows
            || self.rhs.len() != self.n_rows
            || self.row_range.len() != self.n_rows
        {
            return malformed("row vectors disagree with n_rows".into());
        }
        if let Some(names) = &self.col_names {
            if names.len() != self.n_cols {
                return malformed("column name count disagrees with n_cols".into());
            }
        }
        if let Some(names) = &self.row_names {
            if names.len() != self.n_rows {
                return malformed("row name count disagrees with n_rows".into());
            }
        }
        for t in &self.matrix {
            if t.row >= self.n_rows || t.col >= self.n_cols {
                return malformed(format!("triplet ({}, {}) out of range", t.row, t.col));
            }
            if !t.value.is_finite() {
                return malformed(format!("non-finite coefficient at ({}, {})", t.row, t.col));
            }
        }
        for (j, &c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return malformed(format!("non-finite objective coefficient in column {j}"));
            }
        }
        for (i, &b) in self.rhs.iter().enumerate() {
            if !b.is_finite() {
                return malformed(format!("non-finite right-hand side in row {i}"));
            }
            if let Some(r) = self.row_range[i] {
                if !r.is_finite() {
                    return malformed(format!("non-finite range in row {i}"));
                }
            }
        }
        for j in 0..self.n_cols {
            let (lo, hi) = (self.col_lower[j], self.col_upper[j]);
            if lo.is_nan() || hi.is_nan() {
                return malformed(format!("NaN bound in column {j}"));
            }
            if lo > hi {
                return malformed(format!("column {j} has lower bound {lo} above upper {hi}"));
            }
        }
        for &j in &self.binary_cols {
            if j >= self.n_cols {
                return malformed(format!("binary column {j} out of range"));
            }
            if self.col_lower[j] < 0.0 || self.col_upper[j] > 1.0 {
                return malformed(format!("binary column {j} has bounds outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// Matrix entries with duplicates merged, sorted by (col, row).
    pub fn canonical_triplets(&self) -> Vec<Triplet> {
        let mut t = self.matrix.clone();
        t.sort_by(|a, b| (a.col, a.row).cmp(&(b.col, b.row)));
        let mut out: Vec<Triplet> = Vec::with_capacity(t.len());
        for e in t {
            match out.last_mut() {
                Some(last) if last.col == e.col && last.row == e.row => last.value += e.value,
                _ => out.push(e),
            }
        }
        out.retain(|e| e.value != 0.0);
        out
    }

    /// Column-major sparse view of the merged matrix.
    pub(crate) fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); self.n_cols];
        for t in self.canonical_triplets() {
            cols[t.col].push((t.row, t.value));
        }
        cols
    }

    /// Copy of the problem with every column bound replaced.
    pub fn with_bounds(&self, lower: Vec<f64>, upper: Vec<f64>) -> LpProblem {
        LpProblem {
            col_lower: lower,
            col_upper: upper,
            ..self.clone()
        }
    }
}
