//! Sparse LU factorization of simplex basis matrices.
//!
//! Right-looking Gaussian elimination with a Markowitz pivot search and
//! threshold partial pivoting. The factors are stored as the sequence of
//! elimination steps; a product-form eta file carries basis updates between
//! refactorizations.

use std::collections::BTreeSet;

const THRESHOLD: f64 = 0.1;
const ABS_PIVOT_TOL: f64 = 1e-11;
const SEARCH_CANDIDATES: usize = 4;

#[derive(Debug)]
pub(crate) struct Singular {
    /// Basis positions that could not be pivoted.
    pub positions: Vec<usize>,
    /// Rows left without a pivot.
    pub rows: Vec<usize>,
}

#[derive(Debug)]
struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

#[derive(Debug, Default)]
pub(crate) struct LuFactors {
    m: usize,
    pivot_row: Vec<usize>,
    pivot_col: Vec<usize>,
    pivot_val: Vec<f64>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    etas: Vec<Eta>,
}

struct Active {
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<usize>>,
    row_set: BTreeSet<(usize, usize)>,
    col_set: BTreeSet<(usize, usize)>,
}

impl Active {
    fn value(&self, row: usize, col: usize) -> f64 {
        self.rows[row]
            .iter()
            .find(|e| e.0 == col)
            .map(|e| e.1)
            .unwrap_or(0.0)
    }

    fn col_max(&self, col: usize) -> f64 {
        self.cols[col]
            .iter()
            .map(|&r| self.value(r, col).abs())
            .fold(0.0, f64::max)
    }

    fn set_row_count(&mut self, row: usize, old: usize) {
        self.row_set.remove(&(old, row));
        self.row_set.insert((self.rows[row].len(), row));
    }

    fn set_col_count(&mut self, col: usize, old: usize) {
        self.col_set.remove(&(old, col));
        self.col_set.insert((self.cols[col].len(), col));
    }
}

/// Pivot candidate: (markowitz cost, -|value| for tie-breaking, row, col).
type Candidate = (usize, f64, usize, usize);

fn better(a: &Candidate, b: &Option<Candidate>) -> bool {
    match b {
        None => true,
        Some(b) => {
            a.0 < b.0
                || (a.0 == b.0 && a.1 < b.1)
                || (a.0 == b.0 && a.1 == b.1 && (a.2, a.3) < (b.2, b.3))
        }
    }
}

impl LuFactors {
    /// Factorizes the `m x m` matrix whose column `k` is `columns[k]`.
    pub(crate) fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<LuFactors, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut act = Active {
            rows: vec![Vec::new(); m],
            cols: vec![Vec::new(); m],
            row_set: BTreeSet::new(),
            col_set: BTreeSet::new(),
        };
        for (k, col) in columns.iter().enumerate() {
            for &(r, v) in col {
                if v != 0.0 {
                    act.rows[r].push((k, v));
                    act.cols[k].push(r);
                }
            }
        }
        for i in 0..m {
            act.row_set.insert((act.rows[i].len(), i));
            act.col_set.insert((act.cols[i].len(), i));
        }

        let mut lu = LuFactors {
            m,
            l_start: vec![0],
            u_start: vec![0],
            ..Default::default()
        };
        let mut marker = vec![usize::MAX; m];
        let mut bad_cols = Vec::new();

        while let Some(&(count, col)) = act.col_set.iter().next() {
            if count == 0 {
                // structurally empty column
                act.col_set.remove(&(0, col));
                bad_cols.push(col);
                continue;
            }
            let Some((_, _, p, q)) = Self::find_pivot(&act) else {
                // every remaining candidate is numerically tiny; give up on the
                // sparsest column and keep going with the rest
                act.col_set.remove(&(count, col));
                for &r in &act.cols[col].clone() {
                    let old = act.rows[r].len();
                    act.rows[r].retain(|e| e.0 != col);
                    act.set_row_count(r, old);
                }
                act.cols[col].clear();
                bad_cols.push(col);
                continue;
            };
            lu.eliminate(&mut act, p, q, &mut marker);
        }

        if !bad_cols.is_empty() {
            let rows: Vec<usize> = act.row_set.iter().map(|&(_, r)| r).collect();
            bad_cols.sort_unstable();
            return Err(Singular {
                positions: bad_cols,
                rows,
            });
        }
        Ok(lu)
    }

    fn find_pivot(act: &Active) -> Option<Candidate> {
        let mut best: Option<Candidate> = None;
        for &(count, col) in act.col_set.iter().take(SEARCH_CANDIDATES) {
            let max = act.col_max(col);
            if max < ABS_PIVOT_TOL {
                continue;
            }
            for &r in &act.cols[col] {
                let v = act.value(r, col).abs();
                if v >= THRESHOLD * max && v >= ABS_PIVOT_TOL {
                    let cost = (act.rows[r].len() - 1) * (count - 1);
                    let cand = (cost, -v, r, col);
                    if better(&cand, &best) {
                        best = Some(cand);
                    }
                }
            }
            if matches!(best, Some((0, ..))) {
                return best;
            }
        }
        for &(count, row) in act.row_set.iter().take(SEARCH_CANDIDATES) {
            if count == 0 {
                continue;
            }
            for &(col, v) in &act.rows[row] {
                let v = v.abs();
                if v < ABS_PIVOT_TOL {
                    continue;
                }
                let max = act.col_max(col);
                if v >= THRESHOLD * max {
                    let cost = (count - 1) * (act.cols[col].len() - 1);
                    let cand = (cost, -v, row, col);
                    if better(&cand, &best) {
                        best = Some(cand);
                    }
                }
            }
        }
        best
    }

    fn eliminate(&mut self, act: &mut Active, p: usize, q: usize, marker: &mut [usize]) {
        let pivot = act.value(p, q);
        let pivot_row: Vec<(usize, f64)> = act.rows[p].iter().copied().filter(|e| e.0 != q).collect();

        self.pivot_row.push(p);
        self.pivot_col.push(q);
        self.pivot_val.push(pivot);
        for &(c, v) in &pivot_row {
            self.u_idx.push(c);
            self.u_val.push(v);
        }
        self.u_start.push(self.u_idx.len());

        let col_rows: Vec<usize> = act.cols[q].iter().copied().filter(|&r| r != p).collect();
        for &i in &col_rows {
            let old_count = act.rows[i].len();
            let a_iq = act.value(i, q);
            act.rows[i].retain(|e| e.0 != q);
            let l = a_iq / pivot;
            self.l_idx.push(i);
            self.l_val.push(l);
            if l == 0.0 {
                act.set_row_count(i, old_count);
                continue;
            }
            for (k, e) in act.rows[i].iter().enumerate() {
                marker[e.0] = k;
            }
            for &(c, v) in &pivot_row {
                let k = marker[c];
                if k != usize::MAX {
                    act.rows[i][k].1 -= l * v;
                } else {
                    act.rows[i].push((c, -l * v));
                    let old = act.cols[c].len();
                    act.cols[c].push(i);
                    act.set_col_count(c, old);
                }
            }
            for e in &act.rows[i] {
                marker[e.0] = usize::MAX;
            }
            act.set_row_count(i, old_count);
        }
        self.l_start.push(self.l_idx.len());

        for &(c, _) in &pivot_row {
            let old = act.cols[c].len();
            act.cols[c].retain(|&r| r != p);
            act.set_col_count(c, old);
        }
        act.row_set.remove(&(act.rows[p].len(), p));
        act.col_set.remove(&(act.cols[q].len(), q));
        act.rows[p].clear();
        act.cols[q].clear();
    }

    pub(crate) fn num_updates(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B x = b` in place; `b` is indexed by row on entry and by basis
    /// position on exit.
    pub(crate) fn ftran(&self, b: &mut [f64]) {
        let m = self.m;
        for k in 0..m {
            let bp = b[self.pivot_row[k]];
            if bp != 0.0 {
                for e in self.l_start[k]..self.l_start[k + 1] {
                    b[self.l_idx[e]] -= self.l_val[e] * bp;
                }
            }
        }
        let mut x = vec![0.0; m];
        for k in (0..m).rev() {
            let mut s = b[self.pivot_row[k]];
            for e in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_val[e] * x[self.u_idx[e]];
            }
            x[self.pivot_col[k]] = s / self.pivot_val[k];
        }
        for eta in &self.etas {
            let xr = x[eta.pos] / eta.pivot;
            x[eta.pos] = xr;
            if xr != 0.0 {
                for &(i, a) in &eta.entries {
                    x[i] -= a * xr;
                }
            }
        }
        b.copy_from_slice(&x);
    }

    /// Solves `B^T y = c` in place; `c` is indexed by basis position on entry
    /// and by row on exit.
    pub(crate) fn btran(&self, c: &mut [f64]) {
        let m = self.m;
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.pos];
            for &(i, a) in &eta.entries {
                s -= a * c[i];
            }
            c[eta.pos] = s / eta.pivot;
        }
        let mut z = vec![0.0; m];
        for k in 0..m {
            let zp = c[self.pivot_col[k]] / self.pivot_val[k];
            z[self.pivot_row[k]] = zp;
            if zp != 0.0 {
                for e in self.u_start[k]..self.u_start[k + 1] {
                    c[self.u_idx[e]] -= self.u_val[e] * zp;
                }
            }
        }
        for k in (0..m).rev() {
            let mut s = 0.0;
            for e in self.l_start[k]..self.l_start[k + 1] {
                s += self.l_val[e] * z[self.l_idx[e]];
            }
            if s != 0.0 {
                z[self.pivot_row[k]] -= s;
            }
        }
        c.copy_from_slice(&z);
    }

    /// Records the replacement of basis position `pos` by a column whose
    /// FTRAN image is `alpha`.
    pub(crate) fn update(&mut self, pos: usize, alpha: &[f64]) {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != pos && a != 0.0)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }
}
