//! Sparse linear and mixed-binary programming.
//!
//! [`solve_lp`] runs a bounded-variable revised simplex, [`solve_milp`] wraps
//! it in best-bound branch-and-bound over the binary columns, and the
//! [`mps`] and [`lpformat`] modules move problems in and out of text form.
//!
//! Before the simplex runs, [`solve_lp`] splits the constraint matrix into
//! connected components (rows linked through shared columns) and solves each
//! block on its own. Scenario-indexed problems without coupling rows fall
//! apart into one block per scenario this way.

mod lu;
mod milp;
pub mod lpformat;
pub mod mps;
mod problem;
mod simplex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use milp::{solve_milp, MipStats};
pub use problem::{LpProblem, RowSense, Triplet, INFINITY_THRESHOLD};

use simplex::{normalize_bound, StdLp};

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveSettings {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub integrality_tol: f64,
    /// Relative optimality gap at which branch-and-bound stops.
    pub mip_gap: f64,
    pub node_limit: usize,
    /// Wall-clock limit in seconds.
    pub time_limit: Option<f64>,
    pub iteration_limit: usize,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            integrality_tol: 1e-6,
            mip_gap: 1e-6,
            node_limit: 100_000,
            time_limit: None,
            iteration_limit: 50_000_000,
        }
    }
}

impl SolveSettings {
    pub fn validate(&self) -> Result<(), LpError> {
        for (name, v) in [
            ("feasibility_tol", self.feasibility_tol),
            ("optimality_tol", self.optimality_tol),
            ("integrality_tol", self.integrality_tol),
            ("mip_gap", self.mip_gap),
        ] {
            if !(v > 0.0) {
                return Err(LpError::Malformed(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    /// Row multipliers; positive on binding `>=` rows of a minimization.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Rows left violated by the phase-1 point when infeasible.
    pub infeasible_rows: Vec<usize>,
    pub infeasible_cols: Vec<usize>,
    pub mip: Option<MipStats>,
}

impl LpSolution {
    fn empty(status: LpStatus, problem: &LpProblem) -> Self {
        LpSolution {
            status,
            primal: vec![0.0; problem.n_cols],
            duals: vec![0.0; problem.n_rows],
            reduced_costs: vec![0.0; problem.n_cols],
            objective: f64::NAN,
            iterations: 0,
            infeasible_rows: Vec::new(),
            infeasible_cols: Vec::new(),
            mip: None,
        }
    }

    /// Lagrangian dual bound implied by the row multipliers. Reduced costs are
    /// recomputed from the duals rather than taken from the solver.
    pub fn dual_objective(&self, problem: &LpProblem) -> f64 {
        let mut reduced = problem.objective.clone();
        for t in &problem.matrix {
            reduced[t.col] -= t.value * self.duals[t.row];
        }
        let mut bound = 0.0;
        let mut term = |coef: f64, lo: f64, hi: f64| {
            if coef.abs() < 1e-9 {
                return;
            }
            let b = if coef > 0.0 { lo } else { hi };
            bound += coef * if b.is_finite() { b } else { f64::NEG_INFINITY * coef.signum() };
        };
        for r in 0..problem.n_rows {
            let (lo, hi) = problem.row_bounds(r);
            term(self.duals[r], normalize_bound(lo), normalize_bound(hi));
        }
        for (j, &d) in reduced.iter().enumerate() {
            term(
                d,
                normalize_bound(problem.col_lower[j]),
                normalize_bound(problem.col_upper[j]),
            );
        }
        bound
    }
}

/// Solves the LP relaxation of `problem` (binary marks are ignored).
pub fn solve_lp(problem: &LpProblem, settings: &SolveSettings) -> Result<LpSolution, LpError> {
    problem.validate()?;
    settings.validate()?;
    let columns = problem.columns();
    let comps = components(problem, &columns);

    let mut sol = LpSolution::empty(LpStatus::Optimal, problem);
    let mut statuses = Vec::new();

    // columns that touch no row sit at their cheapest bound
    for j in 0..problem.n_cols {
        if !columns[j].is_empty() {
            continue;
        }
        let (lo, hi) = (
            normalize_bound(problem.col_lower[j]),
            normalize_bound(problem.col_upper[j]),
        );
        let c = problem.objective[j];
        let v = if c > 0.0 {
            lo
        } else if c < 0.0 {
            hi
        } else if lo.is_finite() {
            lo
        } else if hi.is_finite() {
            hi
        } else {
            0.0
        };
        if v.is_infinite() {
            statuses.push(LpStatus::Unbounded);
            sol.primal[j] = 0.0;
        } else {
            sol.primal[j] = v;
        }
        sol.reduced_costs[j] = c;
    }
    for r in 0..problem.n_rows {
        if comps.row_comp[r].is_none() {
            let (lo, hi) = problem.row_bounds(r);
            if lo > settings.feasibility_tol || hi < -settings.feasibility_tol {
                statuses.push(LpStatus::Infeasible);
                sol.infeasible_rows.push(r);
            }
        }
    }

    let results: Vec<_> = comps
        .blocks
        .par_iter()
        .map(|(rows, cols)| {
            let lp = block_lp(problem, &columns, rows, cols);
            simplex::solve(&lp, settings)
        })
        .collect();

    for ((rows, cols), res) in comps.blocks.iter().zip(results) {
        statuses.push(res.status);
        sol.iterations += res.iterations;
        for (k, &j) in cols.iter().enumerate() {
            sol.primal[j] = res.x[k];
            sol.reduced_costs[j] = res.reduced_costs[k];
        }
        for (k, &r) in rows.iter().enumerate() {
            sol.duals[r] = res.duals[k];
        }
        sol.infeasible_rows.extend(res.infeasible_rows.iter().map(|&k| rows[k]));
        sol.infeasible_cols.extend(res.infeasible_cols.iter().map(|&k| cols[k]));
    }
    sol.infeasible_rows.sort_unstable();
    sol.infeasible_cols.sort_unstable();

    sol.status = [
        LpStatus::Infeasible,
        LpStatus::Unbounded,
        LpStatus::Limit,
    ]
    .into_iter()
    .find(|s| statuses.contains(s))
    .unwrap_or(LpStatus::Optimal);
    sol.objective = match sol.status {
        LpStatus::Optimal | LpStatus::Limit => problem.objective_at(&sol.primal),
        LpStatus::Unbounded => f64::NEG_INFINITY,
        LpStatus::Infeasible => f64::INFINITY,
    };
    if sol.status != LpStatus::Optimal {
        sol.duals.iter_mut().for_each(|d| *d = 0.0);
    }
    Ok(sol)
}

struct Components {
    row_comp: Vec<Option<usize>>,
    /// (rows, columns) of each block, both ascending; blocks ordered by first row.
    blocks: Vec<(Vec<usize>, Vec<usize>)>,
}

fn components(problem: &LpProblem, columns: &[Vec<(usize, f64)>]) -> Components {
    let m = problem.n_rows;
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut used = vec![false; m];
    for col in columns {
        if let Some(&(first, _)) = col.first() {
            used[first] = true;
            let a = find(&mut parent, first);
            for &(r, _) in &col[1..] {
                used[r] = true;
                let b = find(&mut parent, r);
                if a != b {
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    parent[hi] = lo;
                }
            }
        }
    }
    let mut row_comp = vec![None; m];
    let mut root_block = vec![usize::MAX; m];
    let mut blocks: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for r in 0..m {
        if !used[r] {
            continue;
        }
        let root = find(&mut parent, r);
        if root_block[root] == usize::MAX {
            root_block[root] = blocks.len();
            blocks.push((Vec::new(), Vec::new()));
        }
        let b = root_block[root];
        row_comp[r] = Some(b);
        blocks[b].0.push(r);
    }
    for (j, col) in columns.iter().enumerate() {
        if let Some(&(first, _)) = col.first() {
            let b = row_comp[first].expect("used row");
            blocks[b].1.push(j);
        }
    }
    Components { row_comp, blocks }
}

fn block_lp(problem: &LpProblem, columns: &[Vec<(usize, f64)>], rows: &[usize], cols: &[usize]) -> StdLp {
    let mut local = vec![usize::MAX; problem.n_rows];
    for (k, &r) in rows.iter().enumerate() {
        local[r] = k;
    }
    let (row_lb, row_ub): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .map(|&r| {
            let (lo, hi) = problem.row_bounds(r);
            (normalize_bound(lo), normalize_bound(hi))
        })
        .unzip();
    StdLp {
        n: cols.len(),
        m: rows.len(),
        cols: cols
            .iter()
            .map(|&j| columns[j].iter().map(|&(r, a)| (local[r], a)).collect())
            .collect(),
        cost: cols.iter().map(|&j| problem.objective[j]).collect(),
        col_lb: cols.iter().map(|&j| normalize_bound(problem.col_lower[j])).collect(),
        col_ub: cols.iter().map(|&j| normalize_bound(problem.col_upper[j])).collect(),
        row_lb,
        row_ub,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub max_row_violation: f64,
    pub max_bound_violation: f64,
    pub max_integrality_violation: f64,
    pub objective: f64,
    /// Rows whose violation exceeds the tolerance.
    pub violated_rows: Vec<usize>,
    pub violated_cols: Vec<usize>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violated_rows.is_empty() && self.violated_cols.is_empty()
    }
}

/// Measures how far `point` is from satisfying the rows, bounds and
/// integrality marks of `problem`.
pub fn check_point(problem: &LpProblem, point: &[f64], tol: f64) -> FeasibilityReport {
    let act = problem.row_activity(point);
    let mut rep = FeasibilityReport {
        max_row_violation: 0.0,
        max_bound_violation: 0.0,
        max_integrality_violation: 0.0,
        objective: problem.objective_at(point),
        violated_rows: Vec::new(),
        violated_cols: Vec::new(),
    };
    for (r, &a) in act.iter().enumerate() {
        let (lo, hi) = problem.row_bounds(r);
        let v = (normalize_bound(lo) - a).max(a - normalize_bound(hi)).max(0.0);
        rep.max_row_violation = rep.max_row_violation.max(v);
        if v > tol {
            rep.violated_rows.push(r);
        }
    }
    for (j, &x) in point.iter().enumerate() {
        let lo = normalize_bound(problem.col_lower[j]);
        let hi = normalize_bound(problem.col_upper[j]);
        let mut v = (lo - x).max(x - hi).max(0.0);
        rep.max_bound_violation = rep.max_bound_violation.max(v);
        if problem.binary_cols.contains(&j) {
            let frac = (x - x.round()).abs();
            rep.max_integrality_violation = rep.max_integrality_violation.max(frac);
            v = v.max(frac);
        }
        if v > tol {
            rep.violated_cols.push(j);
        }
    }
    rep
}
