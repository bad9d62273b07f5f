//! Best-bound branch-and-bound over binary columns.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use log::debug;
use serde::{Deserialize, Serialize};

use super::{solve_lp, LpError, LpProblem, LpSolution, LpStatus, SolveSettings};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MipStats {
    pub nodes: usize,
    pub best_bound: f64,
    /// `(incumbent - bound) / max(1, |incumbent|)`.
    pub gap: f64,
    /// (node number, objective) each time the incumbent improved.
    pub incumbent_trace: Vec<(usize, f64)>,
}

struct Node {
    bound: f64,
    id: usize,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap pops the greatest: smallest bound first, then oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn gap(incumbent: f64, bound: f64) -> f64 {
    if incumbent.is_infinite() {
        return f64::INFINITY;
    }
    ((incumbent - bound) / incumbent.abs().max(1.0)).max(0.0)
}

/// Solves `problem` with integrality enforced on `binary_cols`.
///
/// Branches on the most fractional binary (ties to the lowest column) and
/// always expands the open node with the smallest relaxation bound.
pub fn solve_milp(problem: &LpProblem, settings: &SolveSettings) -> Result<LpSolution, LpError> {
    problem.validate()?;
    settings.validate()?;
    if problem.binary_cols.is_empty() {
        return solve_lp(problem, settings);
    }
    let start = Instant::now();
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        id: 0,
        fixings: Vec::new(),
    });
    let mut next_id = 1;
    let mut nodes = 0;
    let mut iterations = 0;
    let mut incumbent: Option<LpSolution> = None;
    let mut inc_obj = f64::INFINITY;
    let mut trace = Vec::new();
    let mut limit_hit = false;

    while let Some(node) = heap.pop() {
        if gap(inc_obj, node.bound) <= settings.mip_gap {
            // best-bound order: every open node is at least as bad
            heap.push(node);
            break;
        }
        if nodes >= settings.node_limit
            || settings
                .time_limit
                .is_some_and(|t| start.elapsed().as_secs_f64() > t)
        {
            heap.push(node);
            limit_hit = true;
            break;
        }
        nodes += 1;

        let mut lower = problem.col_lower.clone();
        let mut upper = problem.col_upper.clone();
        for &(j, v) in &node.fixings {
            lower[j] = v;
            upper[j] = v;
        }
        let relax = solve_lp(&problem.with_bounds(lower, upper), settings)?;
        iterations += relax.iterations;
        match relax.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded if nodes == 1 => {
                let mut sol = relax;
                sol.mip = Some(MipStats {
                    nodes,
                    best_bound: f64::NEG_INFINITY,
                    gap: f64::INFINITY,
                    incumbent_trace: trace,
                });
                return Ok(sol);
            }
            LpStatus::Unbounded | LpStatus::Limit => {
                limit_hit = true;
                continue;
            }
            LpStatus::Optimal => {}
        }
        if gap(inc_obj, relax.objective) <= settings.mip_gap {
            continue;
        }

        let mut branch: Option<(f64, usize)> = None;
        for &j in &problem.binary_cols {
            let v = relax.primal[j];
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac > settings.integrality_tol && branch.is_none_or(|(f, _)| frac > f) {
                branch = Some((frac, j));
            }
        }
        match branch {
            None => {
                let mut sol = relax;
                for &j in &problem.binary_cols {
                    sol.primal[j] = sol.primal[j].round();
                }
                sol.objective = problem.objective_at(&sol.primal);
                if sol.objective < inc_obj {
                    inc_obj = sol.objective;
                    trace.push((nodes, inc_obj));
                    debug!("node {nodes}: new incumbent {inc_obj}");
                    incumbent = Some(sol);
                }
            }
            Some((_, j)) => {
                for v in [0.0, 1.0] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, v));
                    heap.push(Node {
                        bound: relax.objective,
                        id: next_id,
                        fixings,
                    });
                    next_id += 1;
                }
            }
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let best_bound = open_bound.min(inc_obj);
    let stats = MipStats {
        nodes,
        best_bound,
        gap: gap(inc_obj, best_bound),
        incumbent_trace: trace,
    };
    let mut sol = match incumbent {
        Some(mut sol) => {
            sol.status = if limit_hit { LpStatus::Limit } else { LpStatus::Optimal };
            sol
        }
        None => {
            let mut sol = LpSolution::empty(
                if limit_hit { LpStatus::Limit } else { LpStatus::Infeasible },
                problem,
            );
            sol.objective = f64::INFINITY;
            sol
        }
    };
    sol.iterations = iterations;
    sol.mip = Some(stats);
    Ok(sol)
}
