//! Bounded-variable primal revised simplex.
//!
//! Every row `r` gets a logical variable `s_r` with `A x - s = 0` and
//! `row_lo <= s <= row_hi`, so the all-logical basis is always available as a
//! starting point. Phase 1 minimizes the sum of bound violations of the basic
//! variables (composite approach); phase 2 minimizes the true objective.
//! Pricing is Dantzig's rule with a Harris two-pass ratio test; after a long
//! run of non-improving iterations the method falls back to Bland's rule.

use std::time::Instant;

use log::{debug, trace};

use super::lu::LuFactors;
use super::problem::{is_neg_inf, is_pos_inf};
use super::{LpStatus, SolveSettings};

const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_INTERVAL: usize = 100;
const STALL_LIMIT: usize = 1000;
/// Problems with more variables than this use partial pricing.
const PARTIAL_PRICING_MIN: usize = 20_000;
const PRICING_SEGMENTS: usize = 8;

/// Computational form of a (sub)problem with infinite bounds already mapped
/// to `f64::INFINITY`.
#[derive(Clone, Debug)]
pub(crate) struct StdLp {
    pub n: usize,
    pub m: usize,
    pub cols: Vec<Vec<(usize, f64)>>,
    pub cost: Vec<f64>,
    pub col_lb: Vec<f64>,
    pub col_ub: Vec<f64>,
    pub row_lb: Vec<f64>,
    pub row_ub: Vec<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct SimplexResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    pub infeasible_rows: Vec<usize>,
    pub infeasible_cols: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    Lower,
    Upper,
    Free,
}

pub(crate) fn normalize_bound(v: f64) -> f64 {
    if is_pos_inf(v) {
        f64::INFINITY
    } else if is_neg_inf(v) {
        f64::NEG_INFINITY
    } else {
        v
    }
}

struct Simplex<'a> {
    lp: &'a StdLp,
    settings: &'a SolveSettings,
    cost: Vec<f64>,
    cost_scale: f64,
    lb: Vec<f64>,
    ub: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    lu: LuFactors,
    iterations: usize,
    start: Instant,
    price_segment: usize,
}

enum Pricing {
    Enter { var: usize, dir: f64 },
    None,
}

enum Ratio {
    Flip(f64),
    Leave { pos: usize, theta: f64, bound: f64 },
    Unbounded,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a StdLp, settings: &'a SolveSettings) -> Self {
        let n = lp.n;
        let m = lp.m;
        let cost_scale = lp.cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let cost_scale = if cost_scale > 0.0 { cost_scale } else { 1.0 };
        let mut cost: Vec<f64> = lp.cost.iter().map(|c| c / cost_scale).collect();
        cost.resize(n + m, 0.0);
        let mut lb = lp.col_lb.clone();
        lb.extend_from_slice(&lp.row_lb);
        let mut ub = lp.col_ub.clone();
        ub.extend_from_slice(&lp.row_ub);

        let mut x = vec![0.0; n + m];
        let mut state = vec![VarState::Free; n + m];
        for j in 0..n {
            if lb[j].is_finite() {
                x[j] = lb[j];
                state[j] = VarState::Lower;
            } else if ub[j].is_finite() {
                x[j] = ub[j];
                state[j] = VarState::Upper;
            }
        }
        let basis: Vec<usize> = (n..n + m).collect();
        for (pos, &v) in basis.iter().enumerate() {
            state[v] = VarState::Basic(pos);
        }
        Simplex {
            lp,
            settings,
            cost,
            cost_scale,
            lb,
            ub,
            x,
            state,
            basis,
            lu: LuFactors::default(),
            iterations: 0,
            start: Instant::now(),
            price_segment: 0,
        }
    }

    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.lp.n {
            self.lp.cols[j].clone()
        } else {
            vec![(j - self.lp.n, -1.0)]
        }
    }

    fn refactor(&mut self) {
        loop {
            let cols: Vec<Vec<(usize, f64)>> = self.basis.iter().map(|&j| self.column(j)).collect();
            match LuFactors::factorize(self.lp.m, &cols) {
                Ok(lu) => {
                    self.lu = lu;
                    break;
                }
                Err(sing) => {
                    debug!(
                        "singular basis: replacing {} columns with logicals",
                        sing.positions.len()
                    );
                    for (&pos, &row) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.basis[pos];
                        let logical = self.lp.n + row;
                        self.basis[pos] = logical;
                        self.state[logical] = VarState::Basic(pos);
                        self.make_nonbasic(out);
                    }
                }
            }
        }
        self.compute_basic_values();
    }

    fn make_nonbasic(&mut self, j: usize) {
        let (lo, hi) = (self.lb[j], self.ub[j]);
        let v = self.x[j];
        if lo.is_finite() && (!hi.is_finite() || (v - lo).abs() <= (hi - v).abs()) {
            self.x[j] = lo;
            self.state[j] = VarState::Lower;
        } else if hi.is_finite() {
            self.x[j] = hi;
            self.state[j] = VarState::Upper;
        } else {
            self.x[j] = 0.0;
            self.state[j] = VarState::Free;
        }
    }

    fn compute_basic_values(&mut self) {
        let n = self.lp.n;
        let mut rhs = vec![0.0; self.lp.m];
        for j in 0..n {
            if !matches!(self.state[j], VarState::Basic(_)) && self.x[j] != 0.0 {
                for &(r, a) in &self.lp.cols[j] {
                    rhs[r] -= a * self.x[j];
                }
            }
        }
        for r in 0..self.lp.m {
            if !matches!(self.state[n + r], VarState::Basic(_)) {
                rhs[r] += self.x[n + r];
            }
        }
        self.lu.ftran(&mut rhs);
        for (pos, &j) in self.basis.iter().enumerate() {
            self.x[j] = rhs[pos];
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let tol = self.settings.feasibility_tol;
        let v = self.x[j];
        if v < self.lb[j] - tol {
            self.lb[j] - v
        } else if v > self.ub[j] + tol {
            v - self.ub[j]
        } else {
            0.0
        }
    }

    fn sum_infeasibility(&self) -> f64 {
        self.basis.iter().map(|&j| self.infeasibility(j)).sum()
    }

    fn objective(&self) -> f64 {
        self.cost.iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    /// Bounds of a basic variable as seen by the ratio test in the current phase.
    fn working_bounds(&self, j: usize, phase1: bool) -> (f64, f64) {
        let tol = self.settings.feasibility_tol;
        if phase1 {
            if self.x[j] < self.lb[j] - tol {
                return (f64::NEG_INFINITY, self.lb[j]);
            }
            if self.x[j] > self.ub[j] + tol {
                return (self.ub[j], f64::INFINITY);
            }
        }
        (self.lb[j], self.ub[j])
    }

    fn duals(&self, phase1: bool) -> Vec<f64> {
        let tol = self.settings.feasibility_tol;
        let mut y: Vec<f64> = self
            .basis
            .iter()
            .map(|&j| {
                if phase1 {
                    if self.x[j] < self.lb[j] - tol {
                        -1.0
                    } else if self.x[j] > self.ub[j] + tol {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    self.cost[j]
                }
            })
            .collect();
        self.lu.btran(&mut y);
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64], phase1: bool) -> f64 {
        let c = if phase1 { 0.0 } else { self.cost[j] };
        if j < self.lp.n {
            c - self.lp.cols[j].iter().map(|&(r, a)| a * y[r]).sum::<f64>()
        } else {
            c + y[j - self.lp.n]
        }
    }

    /// Dantzig pricing. Large problems scan one segment at a time, starting
    /// where the previous call stopped, and take the best candidate of the
    /// first segment that has any.
    fn price(&mut self, y: &[f64], phase1: bool, bland: bool) -> Pricing {
        let total = self.lp.n + self.lp.m;
        if bland {
            return self.price_range(y, phase1, 0..total, true);
        }
        let segments = if total > PARTIAL_PRICING_MIN { PRICING_SEGMENTS } else { 1 };
        let len = total.div_ceil(segments);
        for k in 0..segments {
            let seg = (self.price_segment + k) % segments;
            let range = seg * len..((seg + 1) * len).min(total);
            if let found @ Pricing::Enter { .. } = self.price_range(y, phase1, range, false) {
                self.price_segment = (seg + 1) % segments;
                return found;
            }
        }
        Pricing::None
    }

    fn price_range(&self, y: &[f64], phase1: bool, range: std::ops::Range<usize>, bland: bool) -> Pricing {
        let tol = self.settings.optimality_tol;
        let mut best = Pricing::None;
        let mut best_score = 0.0;
        for j in range {
            let state = self.state[j];
            if matches!(state, VarState::Basic(_)) || self.lb[j] == self.ub[j] {
                continue;
            }
            let d = self.reduced_cost(j, y, phase1);
            let dir = match state {
                VarState::Lower if d < -tol => 1.0,
                VarState::Upper if d > tol => -1.0,
                VarState::Free if d.abs() > tol => -d.signum(),
                _ => continue,
            };
            if bland {
                return Pricing::Enter { var: j, dir };
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Pricing::Enter { var: j, dir };
            }
        }
        best
    }

    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], phase1: bool, bland: bool) -> Ratio {
        let tol = self.settings.feasibility_tol;
        let range = self.ub[q] - self.lb[q];
        let mut theta_max = if range.is_finite() { range } else { f64::INFINITY };

        let exact = |pos: usize| -> Option<(f64, f64)> {
            let a = alpha[pos];
            if a.abs() < PIVOT_TOL {
                return None;
            }
            let j = self.basis[pos];
            let delta = -dir * a;
            let (lo, hi) = self.working_bounds(j, phase1);
            if delta < 0.0 && lo.is_finite() {
                Some((((self.x[j] - lo) / -delta).max(0.0), lo))
            } else if delta > 0.0 && hi.is_finite() {
                Some((((hi - self.x[j]) / delta).max(0.0), hi))
            } else {
                None
            }
        };

        if bland {
            let mut best: Option<(f64, usize, usize, f64)> = None;
            for pos in 0..self.lp.m {
                if let Some((t, bound)) = exact(pos) {
                    let key = (t, self.basis[pos]);
                    if best.is_none_or(|b| key < (b.0, b.1)) {
                        best = Some((t, self.basis[pos], pos, bound));
                    }
                }
            }
            return match best {
                Some((t, _, _, _)) if range.is_finite() && range <= t => Ratio::Flip(range),
                Some((t, _, pos, bound)) => Ratio::Leave { pos, theta: t, bound },
                None if range.is_finite() => Ratio::Flip(range),
                None => Ratio::Unbounded,
            };
        }

        for pos in 0..self.lp.m {
            let a = alpha[pos];
            if a.abs() < PIVOT_TOL {
                continue;
            }
            let j = self.basis[pos];
            let delta = -dir * a;
            let (lo, hi) = self.working_bounds(j, phase1);
            let t = if delta < 0.0 && lo.is_finite() {
                (self.x[j] - lo + tol) / -delta
            } else if delta > 0.0 && hi.is_finite() {
                (hi + tol - self.x[j]) / delta
            } else {
                continue;
            };
            theta_max = theta_max.min(t);
        }
        if range.is_finite() && range <= theta_max {
            return Ratio::Flip(range);
        }
        if theta_max.is_infinite() {
            return Ratio::Unbounded;
        }
        let mut best: Option<(f64, usize, f64, f64)> = None;
        for pos in 0..self.lp.m {
            if let Some((t, bound)) = exact(pos) {
                if t <= theta_max {
                    let mag = alpha[pos].abs();
                    if best.is_none_or(|b| mag > b.0) {
                        best = Some((mag, pos, t, bound));
                    }
                }
            }
        }
        match best {
            Some((_, pos, theta, bound)) => Ratio::Leave { pos, theta, bound },
            None => Ratio::Unbounded,
        }
    }

    fn out_of_time(&self) -> bool {
        self.iterations >= self.settings.iteration_limit
            || self
                .settings
                .time_limit
                .is_some_and(|t| self.start.elapsed().as_secs_f64() > t)
    }

    fn run(&mut self) -> LpStatus {
        self.refactor();
        let mut fresh = true;
        let mut last_phase1 = None;
        let mut best_obj = f64::INFINITY;
        let mut since_improvement = 0usize;
        let mut bland = false;

        loop {
            if self.lu.num_updates() >= REFACTOR_INTERVAL {
                self.refactor();
                fresh = true;
            }
            let infeas = self.sum_infeasibility();
            let phase1 = infeas > 0.0;
            if last_phase1 != Some(phase1) {
                last_phase1 = Some(phase1);
                best_obj = f64::INFINITY;
                since_improvement = 0;
                bland = false;
            }
            let obj = if phase1 { infeas } else { self.objective() };
            if obj < best_obj - 1e-12 * (1.0 + obj.abs()) {
                best_obj = obj;
                since_improvement = 0;
                if bland {
                    trace!("leaving Bland mode after progress");
                }
                bland = false;
            } else {
                since_improvement += 1;
                if since_improvement > STALL_LIMIT && !bland {
                    debug!("stalled for {STALL_LIMIT} iterations, switching to Bland's rule");
                    bland = true;
                }
            }

            let y = self.duals(phase1);
            let (q, dir) = match self.price(&y, phase1, bland) {
                Pricing::Enter { var, dir } => (var, dir),
                Pricing::None => {
                    if !fresh {
                        self.refactor();
                        fresh = true;
                        continue;
                    }
                    return if phase1 {
                        LpStatus::Infeasible
                    } else {
                        LpStatus::Optimal
                    };
                }
            };
            if self.out_of_time() {
                return LpStatus::Limit;
            }

            let mut alpha = vec![0.0; self.lp.m];
            for (r, a) in self.column(q) {
                alpha[r] = a;
            }
            self.lu.ftran(&mut alpha);

            let ratio = self.ratio_test(q, dir, &alpha, phase1, bland);
            self.iterations += 1;
            match ratio {
                Ratio::Unbounded => {
                    if !fresh {
                        self.refactor();
                        fresh = true;
                        continue;
                    }
                    if phase1 {
                        // cannot happen in exact arithmetic; treat as numerical trouble
                        debug!("phase 1 ray detected, aborting");
                        return LpStatus::Limit;
                    }
                    return LpStatus::Unbounded;
                }
                Ratio::Flip(theta) => {
                    self.step(q, dir, theta, &alpha);
                    self.state[q] = if dir > 0.0 {
                        self.x[q] = self.ub[q];
                        VarState::Upper
                    } else {
                        self.x[q] = self.lb[q];
                        VarState::Lower
                    };
                }
                Ratio::Leave { pos, theta, bound } => {
                    self.step(q, dir, theta, &alpha);
                    let out = self.basis[pos];
                    self.x[out] = bound;
                    self.state[out] = if bound == self.lb[out] {
                        VarState::Lower
                    } else {
                        VarState::Upper
                    };
                    self.basis[pos] = q;
                    self.state[q] = VarState::Basic(pos);
                    self.lu.update(pos, &alpha);
                    fresh = false;
                }
            }
        }
    }

    fn step(&mut self, q: usize, dir: f64, theta: f64, alpha: &[f64]) {
        if theta == 0.0 {
            return;
        }
        self.x[q] += dir * theta;
        for (pos, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                let j = self.basis[pos];
                self.x[j] -= dir * a * theta;
            }
        }
    }
}

pub(crate) fn solve(lp: &StdLp, settings: &SolveSettings) -> SimplexResult {
    let mut s = Simplex::new(lp, settings);
    let status = s.run();
    let n = lp.n;
    let m = lp.m;
    let mut infeasible_rows = Vec::new();
    let mut infeasible_cols = Vec::new();
    if status == LpStatus::Infeasible {
        for j in 0..n + m {
            if s.infeasibility(j) > 0.0 {
                if j < n {
                    infeasible_cols.push(j);
                } else {
                    infeasible_rows.push(j - n);
                }
            }
        }
    }
    let (duals, reduced_costs) = if status == LpStatus::Optimal {
        let y = s.duals(false);
        let d: Vec<f64> = (0..n).map(|j| s.reduced_cost(j, &y, false) * s.cost_scale).collect();
        (y.iter().map(|v| v * s.cost_scale).collect(), d)
    } else {
        (vec![0.0; m], vec![0.0; n])
    };
    debug!(
        "simplex {}x{} finished: {:?} after {} iterations",
        m, n, status, s.iterations
    );
    SimplexResult {
        status,
        x: s.x[..n].to_vec(),
        duals,
        reduced_costs,
        iterations: s.iterations,
        infeasible_rows,
        infeasible_cols,
    }
}
