//! Independent oracles and instance generators shared by the integration and
//! acceptance tests. Nothing here calls the simplex.
#![allow(dead_code)]

use mgs_core::lpcore::RowSense;
use mgs_core::LpProblem;
use rand::Rng;

/// Optimal value of a bounded LP found by enumerating every vertex of the
/// feasible polytope, or `None` when no vertex is feasible.
///
/// Every column needs finite bounds. A vertex is identified by the columns
/// held at a bound and, for the remaining `k` columns, `k` tight row sides
/// solved as a square system.
pub fn vertex_optimum(p: &LpProblem, tol: f64) -> Option<(f64, Vec<f64>)> {
    let n = p.n_cols;
    let m = p.n_rows;
    assert!(p.col_lower.iter().chain(&p.col_upper).all(|v| v.is_finite() && v.abs() < 1e20));
    let mut a = vec![vec![0.0; n]; m];
    for t in &p.matrix {
        a[t.row][t.col] += t.value;
    }
    let rows: Vec<(f64, f64)> = (0..m).map(|r| p.row_bounds(r)).collect();
    // Each row side that can be tight: (row, value).
    let mut sides = Vec::new();
    for (r, &(lo, hi)) in rows.iter().enumerate() {
        if lo.is_finite() && lo > -1e20 {
            sides.push((r, lo));
        }
        if hi.is_finite() && hi < 1e20 && hi != lo {
            sides.push((r, hi));
        }
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut state = vec![0u8; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&j| state[j] == 2).collect();
        let k = free.len();
        let mut x: Vec<f64> = (0..n)
            .map(|j| if state[j] == 1 { p.col_upper[j] } else { p.col_lower[j] })
            .collect();
        if k == 0 {
            consider(p, &a, &rows, &x, tol, &mut best);
        } else if k <= m {
            for combo in combinations(sides.len(), k) {
                let chosen: Vec<(usize, f64)> = combo.iter().map(|&i| sides[i]).collect();
                if chosen.windows(2).any(|w| w[0].0 == w[1].0) {
                    continue;
                }
                // Square system over the free columns.
                let mut mat = vec![vec![0.0; k + 1]; k];
                for (i, &(r, v)) in chosen.iter().enumerate() {
                    let mut rhs = v;
                    for j in 0..n {
                        if state[j] != 2 {
                            rhs -= a[r][j] * x[j];
                        }
                    }
                    for (c, &j) in free.iter().enumerate() {
                        mat[i][c] = a[r][j];
                    }
                    mat[i][k] = rhs;
                }
                if let Some(sol) = gauss(mat) {
                    for (c, &j) in free.iter().enumerate() {
                        x[j] = sol[c];
                    }
                    consider(p, &a, &rows, &x, tol, &mut best);
                }
            }
        }
        // Next state; fixed columns never go free.
        let mut j = 0;
        loop {
            if j == n {
                return best;
            }
            let limit = if p.col_lower[j] == p.col_upper[j] { 0 } else { 2 };
            if state[j] < limit {
                state[j] += 1;
                break;
            }
            state[j] = 0;
            j += 1;
        }
    }
}

fn consider(p: &LpProblem, a: &[Vec<f64>], rows: &[(f64, f64)], x: &[f64], tol: f64, best: &mut Option<(f64, Vec<f64>)>) {
    for j in 0..p.n_cols {
        if x[j] < p.col_lower[j] - tol || x[j] > p.col_upper[j] + tol {
            return;
        }
    }
    for (r, &(lo, hi)) in rows.iter().enumerate() {
        let act: f64 = a[r].iter().zip(x).map(|(c, v)| c * v).sum();
        if act < lo - tol || act > hi + tol {
            return;
        }
    }
    let obj: f64 = p.objective.iter().zip(x).map(|(c, v)| c * v).sum();
    if best.as_ref().map_or(true, |(b, _)| obj < *b) {
        *best = Some((obj, x.to_vec()));
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Solves an augmented `k x (k+1)` system by Gaussian elimination with
/// partial pivoting; `None` when the matrix is singular.
fn gauss(mut m: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let k = m.len();
    for c in 0..k {
        let piv = (c..k).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[piv][c].abs() < 1e-9 {
            return None;
        }
        m.swap(c, piv);
        for r in 0..k {
            if r != c {
                let f = m[r][c] / m[c][c];
                if f != 0.0 {
                    for cc in c..=k {
                        m[r][cc] -= f * m[c][cc];
                    }
                }
            }
        }
    }
    Some((0..k).map(|i| m[i][k] / m[i][i]).collect())
}

/// Optimal value of a mixed-binary problem by trying every binary pattern
/// and solving each restriction with [`vertex_optimum`].
pub fn enumerate_optimum(p: &LpProblem, tol: f64) -> Option<f64> {
    let bins: Vec<usize> = p.binary_cols.iter().copied().collect();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << bins.len()) {
        let mut lo = p.col_lower.clone();
        let mut hi = p.col_upper.clone();
        for (b, &j) in bins.iter().enumerate() {
            let v = ((mask >> b) & 1) as f64;
            lo[j] = v;
            hi[j] = v;
        }
        let mut q = p.with_bounds(lo, hi);
        q.binary_cols.clear();
        if let Some((v, _)) = vertex_optimum(&q, tol) {
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best
}

/// Random bounded LP with `n` columns and `m` rows. Rows are built around a
/// random point inside the box, so most instances are feasible; roughly one
/// in ten gets a row pushed out of reach.
pub fn random_lp<R: Rng>(rng: &mut R, n: usize, m: usize) -> LpProblem {
    let mut p = LpProblem::new("random");
    let mut x0 = Vec::with_capacity(n);
    for _ in 0..n {
        let lo = rng.random_range(-3i32..=1) as f64;
        let hi = lo + rng.random_range(1i32..=5) as f64;
        p.add_col(rng.random_range(-5i32..=5) as f64, lo, hi);
        x0.push(rng.random_range(lo..hi));
    }
    let infeasible = rng.random_bool(0.1);
    for r in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.6) {
                let v = rng.random_range(-4i32..=4) as f64;
                if v != 0.0 {
                    coeffs.push((j, v));
                }
            }
        }
        if coeffs.is_empty() {
            coeffs.push((rng.random_range(0..n), 1.0));
        }
        let act: f64 = coeffs.iter().map(|&(j, v)| v * x0[j]).sum();
        let slack = rng.random_range(0.0..3.0);
        let (sense, rhs) = match rng.random_range(0..4) {
            0 => (RowSense::Eq, act),
            1 => (RowSense::Ge, act - slack),
            _ => (RowSense::Le, act + slack),
        };
        p.add_row(sense, rhs, &coeffs);
        if rng.random_bool(0.15) && sense != RowSense::Eq {
            p.row_range[r] = Some(rng.random_range(0.5..4.0));
        }
    }
    if infeasible && m > 0 {
        // A row that no point of the box can reach.
        let r = rng.random_range(0..m);
        let reach: f64 = (0..n)
            .map(|j| p.col_lower[j].abs().max(p.col_upper[j].abs()) * 4.0)
            .sum();
        p.row_sense[r] = RowSense::Ge;
        p.rhs[r] = reach + 1.0;
        p.row_range[r] = None;
    }
    p
}

/// Random mixed-binary problem: `b` binary columns among `n`.
pub fn random_milp<R: Rng>(rng: &mut R, n: usize, m: usize, b: usize) -> LpProblem {
    let mut p = random_lp(rng, n, m);
    for j in 0..b.min(n) {
        p.col_lower[j] = 0.0;
        p.col_upper[j] = 1.0;
        p.binary_cols.insert(j);
    }
    // Recentre rows so that some binary pattern is likely feasible.
    let mut x0: Vec<f64> = (0..n).map(|j| 0.5 * (p.col_lower[j] + p.col_upper[j])).collect();
    for j in 0..b.min(n) {
        x0[j] = rng.random_range(0..=1) as f64;
    }
    let act = p.row_activity(&x0);
    for r in 0..m {
        let slack = rng.random_range(0.0..2.0);
        p.rhs[r] = match p.row_sense[r] {
            RowSense::Eq => act[r],
            RowSense::Ge => act[r] - slack,
            RowSense::Le => act[r] + slack,
        };
    }
    p
}

use mgs_core::{ChpUnit, DeferrableLoad, GridTariff, MicrogridConfig, Phev, Scenario, ScenarioSet};

/// One CHP unit, one vehicle and one deferrable load over three periods,
/// with two scenarios. Every bound sits on the 0.5 kW lattice, including
/// the net storage limits `eta+ R+ = 4` and `R- / eta- = 5`.
pub fn micro_instance() -> (MicrogridConfig, ScenarioSet) {
    let price_buy = vec![0.05, 0.14, 0.09];
    let config = MicrogridConfig {
        horizon: 3,
        period_hours: 1.0,
        chp_units: vec![ChpUnit {
            p_min: 0.0,
            p_max: 10.0,
            alpha: 1.25,
            cost_per_kwh: 0.06,
        }],
        phevs: vec![Phev {
            e_min: 1.0,
            e_max: 9.0,
            e_initial: 5.0,
            charge_rate_max: 5.0,
            discharge_rate_max: 4.0,
            eta_charge: 0.8,
            eta_discharge: 0.8,
            degradation_cost_per_kwh: 0.01,
        }],
        deferrables: vec![DeferrableLoad {
            t_arrive: 1,
            t_depart: 3,
            rate_min: 0.0,
            rate_max: 5.0,
            energy_nominal: 5.0,
        }],
        tariff: GridTariff {
            price_sell: price_buy.iter().map(|p| 0.8 * p).collect(),
            price_buy,
            exchange_cap: vec![100.0; 3],
        },
        base_power: vec![6.0, 8.0, 5.0],
        base_heat: vec![5.0, 6.25, 5.0],
        solar_capacity: 5.0,
    };
    let scenarios = ScenarioSet::new(vec![
        Scenario {
            probability: 0.5,
            solar: vec![0.0, 3.5, 1.0],
            parking: vec![vec![true, true, true]],
            deferrable_energy: vec![6.0],
        },
        Scenario {
            probability: 0.5,
            solar: vec![0.0, 1.5, 2.5],
            parking: vec![vec![true, false, true]],
            deferrable_energy: vec![4.5],
        },
    ]);
    (config, scenarios)
}

/// Brute-force optimum of a three-period, single-unit instance over the
/// lattice of spacing `step`, with the bound on how far the lattice optimum
/// can sit above the continuous one.
///
/// Lattice coordinates are the net storage changes `x1, x2` (the terminal
/// condition fixes `x3`), the serving rates `l1, l2` (the energy requirement
/// fixes `l3`) and the CHP output in each period. Every remaining choice has
/// a closed form: storage moves one way only, and the grid covers the net
/// deficit by buying or the surplus by selling.
///
/// Every constraint is an interval on partial sums of the lattice
/// coordinates with data on the lattice, so each feasible point has a
/// feasible lattice neighbour within one step per coordinate. The bound is
/// `step` times the sum of per-coordinate Lipschitz constants.
pub fn lattice_optimum(config: &MicrogridConfig, set: &ScenarioSet, step: f64) -> (f64, f64) {
    assert_eq!(config.horizon, 3);
    assert_eq!(config.chp_units.len(), 1);
    assert_eq!(config.phevs.len(), 1);
    assert_eq!(config.deferrables.len(), 1);
    let unit = &config.chp_units[0];
    let ev = &config.phevs[0];
    let load = &config.deferrables[0];
    assert_eq!((load.t_arrive, load.t_depart), (1, 3));
    assert_eq!(config.period_hours, 1.0);
    let tariff = &config.tariff;
    let max_buy = tariff.price_buy.iter().cloned().fold(0.0, f64::max);

    let lattice = |lo: f64, hi: f64| -> Vec<f64> {
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    };
    let x_lo = -ev.discharge_rate_max / ev.eta_discharge;
    let x_hi = ev.eta_charge * ev.charge_rate_max;

    // Best cost of period t for a given net storage change and serving rate.
    let period = |sc: &Scenario, t: usize, x: f64, l: f64| -> Option<f64> {
        let (draw, degradation) = if x >= 0.0 {
            (x / ev.eta_charge, ev.degradation_cost_per_kwh * x)
        } else {
            (x * ev.eta_discharge, -ev.degradation_cost_per_kwh * x)
        };
        let p_heat = config.base_heat[t] / unit.alpha;
        let mut best: Option<f64> = None;
        for p in lattice(unit.p_min, unit.p_max) {
            if p + 1e-9 < p_heat {
                continue;
            }
            let deficit = config.base_power[t] + l + draw - p - sc.solar[t];
            if deficit.abs() > tariff.exchange_cap[t] + 1e-9 {
                continue;
            }
            let grid = if deficit >= 0.0 {
                tariff.price_buy[t] * deficit
            } else {
                tariff.price_sell[t] * deficit
            };
            let c = unit.cost_per_kwh * p + degradation + grid;
            best = Some(best.map_or(c, |b: f64| b.min(c)));
        }
        best
    };

    let xs = lattice(x_lo, x_hi);
    let ls = lattice(load.rate_min, load.rate_max);
    let mut total = 0.0;
    for sc in &set.scenarios {
        let mut best = f64::INFINITY;
        for &x1 in &xs {
            for &x2 in &xs {
                let x3 = -x1 - x2;
                if x3 < x_lo - 1e-9 || x3 > x_hi + 1e-9 {
                    continue;
                }
                let xv = [x1, x2, x3];
                if (0..3).any(|t| !sc.parking[0][t] && xv[t] != 0.0) {
                    continue;
                }
                let e1 = ev.e_initial + x1;
                let e2 = e1 + x2;
                if [e1, e2].iter().any(|&e| e < ev.e_min - 1e-9 || e > ev.e_max + 1e-9) {
                    continue;
                }
                for &l1 in &ls {
                    for &l2 in &ls {
                        let l3 = sc.deferrable_energy[0] - l1 - l2;
                        if l3 < load.rate_min - 1e-9 || l3 > load.rate_max + 1e-9 {
                            continue;
                        }
                        let lv = [l1, l2, l3];
                        let mut c = 0.0;
                        for t in 0..3 {
                            match period(sc, t, xv[t], lv[t]) {
                                Some(v) => c += v,
                                None => {
                                    c = f64::INFINITY;
                                    break;
                                }
                            }
                        }
                        best = best.min(c);
                    }
                }
            }
        }
        total += sc.probability * best;
    }

    // Moving x1 or x2 by one unit also moves x3; likewise for l.
    let storage_slope = (1.0 / ev.eta_charge).max(ev.eta_discharge) * max_buy + ev.degradation_cost_per_kwh;
    let l_slope = max_buy;
    let p_slope = unit.cost_per_kwh + max_buy;
    let per_scenario = step * (2.0 * 2.0 * storage_slope + 2.0 * 2.0 * l_slope + 3.0 * p_slope);
    (total, per_scenario)
}

/// Directory holding the MPS golden files; valid from any workspace crate.
pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

/// The problems whose MPS text is pinned by golden files.
pub fn mps_fixtures() -> Vec<(&'static str, LpProblem)> {
    let mut text = LpProblem::new("TEXTBOOK");
    let x = text.add_col(-3.0, 0.0, 1e30);
    let y = text.add_col(-5.0, 0.0, 4.0);
    let z = text.add_col(0.25, -2.5, 2.5);
    let w = text.add_col(1.0, -1e30, 1e30);
    let v = text.add_col(0.0, 1.5, 1.5);
    text.add_row(RowSense::Le, 18.0, &[(x, 3.0), (y, 2.0)]);
    text.add_row(RowSense::Ge, -1.0, &[(x, 1.0), (z, -1.0), (w, 1.0)]);
    let r = text.add_row(RowSense::Eq, 2.0, &[(y, 1.0), (z, 1.0), (v, 1.0)]);
    text.row_range[r] = Some(-0.5);
    let r = text.add_row(RowSense::Le, 1.0e-7, &[(w, 1.0), (x, 1.0e6)]);
    text.row_range[r] = Some(12.0);
    for (i, name) in ["x", "y", "z", "w", "v"].iter().enumerate() {
        text.set_col_name(i, *name);
    }
    for (i, name) in ["cap", "link", "mix", "scaled"].iter().enumerate() {
        text.set_row_name(i, *name);
    }

    let mut knap = LpProblem::new("KNAPSACK");
    let values = [10.0, 13.0, 7.0, 8.0];
    let weights = [5.0, 7.0, 3.0, 4.0];
    let cols: Vec<usize> = values.iter().map(|&v| knap.add_binary_col(-v)).collect();
    let slack = knap.add_col(0.1, 0.0, 2.0);
    let mut row: Vec<(usize, f64)> = cols.iter().zip(weights).map(|(&c, w)| (c, w)).collect();
    row.push((slack, -1.0));
    knap.add_row(RowSense::Le, 11.0, &row);
    knap.add_row(RowSense::Le, 1.0, &[(cols[0], 1.0), (cols[1], 1.0)]);

    let (config, set) = micro_instance();
    let options = mgs_core::FormulationOptions {
        stage_mode: mgs_core::StageMode::DayAheadChp,
        exclusivity_binaries: true,
        ..Default::default()
    };
    let (grid, _, _) = mgs_core::build(&config, &set, &options).expect("micro instance builds");
    vec![("textbook", text), ("knapsack", knap), ("microgrid", grid)]
}

/// A scaled-down version of the case-study shape: three CHP units, `n_phev`
/// identical vehicles, four deferrable loads and a time-of-use tariff over
/// 24 periods, with `count` generated scenarios.
pub fn synthetic_instance(n_phev: usize, count: usize, seed: u64) -> (MicrogridConfig, ScenarioSet) {
    use mgs_core::scenario::{ParkingProb, SolarNoise};
    let t_len = 24;
    let price_buy: Vec<f64> = (0..t_len)
        .map(|t| match t {
            0..=6 | 22..=23 => 0.05,
            10..=14 | 18..=20 => 0.14,
            _ => 0.09,
        })
        .collect();
    let base_power: Vec<f64> = (0..t_len)
        .map(|t| 300.0 + 200.0 * (std::f64::consts::PI * (t as f64 - 6.0) / 18.0).sin().max(0.0))
        .collect();
    let config = MicrogridConfig {
        horizon: t_len,
        period_hours: 1.0,
        chp_units: [(150.0, 0.06), (120.0, 0.07), (100.0, 0.09)]
            .iter()
            .map(|&(p_max, cost_per_kwh)| ChpUnit {
                p_min: 0.0,
                p_max,
                alpha: 1.2,
                cost_per_kwh,
            })
            .collect(),
        phevs: vec![Phev::case_study(); n_phev],
        deferrables: (0..4)
            .map(|j| DeferrableLoad {
                t_arrive: 1 + 5 * j,
                t_depart: (6 + 5 * j).min(t_len),
                rate_min: 0.0,
                rate_max: 5.0,
                energy_nominal: 6.0,
            })
            .collect(),
        tariff: GridTariff {
            price_sell: price_buy.iter().map(|p| 0.8 * p).collect(),
            price_buy,
            exchange_cap: vec![1000.0; t_len],
        },
        base_heat: base_power.iter().map(|p| 0.4 * p).collect(),
        base_power,
        solar_capacity: 200.0,
    };
    let spec = mgs_core::GenerationSpec {
        solar_profile_mean: (0..t_len)
            .map(|t| (150.0 * (std::f64::consts::PI * (t as f64 - 6.0) / 13.0).sin()).max(0.0))
            .collect(),
        solar_noise: SolarNoise::MultiplicativeLognormal { sigma: 0.3 },
        parking_prob: ParkingProb::Uniform(0.6),
        deferrable_energy_mean: vec![6.0; 4],
        deferrable_energy_spread: vec![2.0; 4],
        rng_seed: seed,
    };
    let set = mgs_core::generate(&spec, &config, count).expect("synthetic scenarios");
    (config, set)
}
