//! Acceptance suite: one PASS or FAIL line per criterion, non-zero exit if
//! any criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use mgs_cli::manifest::RunManifest;
use mgs_cli::pipeline::{
    compare_policies, load_inputs, run_single, run_solar_sweep, run_window_sweep, solve_instance,
};
use mgs_core::lpcore::check_point;
use mgs_core::lpcore::mps::{export_mps, parse_mps};
use mgs_core::model::check_schedule;
use mgs_core::scenario::{kantorovich_distance, reduce_fast_forward, DistanceWeights};
use mgs_core::{
    build, check_balance, solve_lp, solve_milp, FormulationOptions, LpStatus, ScenarioSet, SolveSettings,
    StageMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.1?}, limit {limit:?}"))?;
    Ok(took)
}

fn data(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(path)
}

fn manifest(path: &str, out: &Path) -> RunManifest {
    let mut m = RunManifest::load(&data(path)).expect("manifest loads");
    m.output = out.to_path_buf();
    m
}

fn lp_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut optimal, mut infeasible) = (0, 0);
    for i in 0..60 {
        let n = rng.random_range(1..=8);
        let m = rng.random_range(1..=6);
        let p = support::random_lp(&mut rng, n, m);
        let sol = solve_lp(&p, &SolveSettings::default()).map_err(|e| e.to_string())?;
        match support::vertex_optimum(&p, 1e-9) {
            Some((best, _)) => {
                ensure(sol.status == LpStatus::Optimal, || format!("instance {i}: {:?}", sol.status))?;
                ensure((sol.objective - best).abs() <= 1e-6, || {
                    format!("instance {i}: {} vs oracle {best}", sol.objective)
                })?;
                optimal += 1;
            }
            None => {
                ensure(sol.status == LpStatus::Infeasible, || format!("instance {i}: {:?}", sol.status))?;
                infeasible += 1;
            }
        }
    }
    let took = within(start, Duration::from_secs(10))?;
    Ok(format!("60 LPs ({optimal} optimal, {infeasible} infeasible) in {took:.2?}"))
}

fn milp_oracle() -> Outcome {
    let start = Instant::now();
    let settings = SolveSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..25 {
        let b = rng.random_range(1..=8);
        let extra = rng.random_range(0..=8 - b);
        let m = rng.random_range(1..=5);
        let p = support::random_milp(&mut rng, b + extra, m, b);
        let sol = solve_milp(&p, &settings).map_err(|e| e.to_string())?;
        match support::enumerate_optimum(&p, 1e-9) {
            Some(best) => {
                ensure(sol.status == LpStatus::Optimal, || format!("instance {i}: {:?}", sol.status))?;
                let tol = settings.mip_gap * best.abs().max(1.0);
                ensure((sol.objective - best).abs() <= tol, || {
                    format!("instance {i}: {} vs oracle {best}", sol.objective)
                })?;
            }
            None => ensure(sol.status == LpStatus::Infeasible, || format!("instance {i}: {:?}", sol.status))?,
        }
    }
    let took = within(start, Duration::from_secs(30))?;
    Ok(format!("25 MILPs with up to 8 binaries in {took:.2?}"))
}

fn micro_instance() -> Outcome {
    let start = Instant::now();
    let (config, set) = support::micro_instance();
    let (p, _, _) = build(&config, &set, &FormulationOptions::default()).map_err(|e| e.to_string())?;
    let sol = solve_lp(&p, &SolveSettings::default()).map_err(|e| e.to_string())?;
    ensure(sol.status == LpStatus::Optimal, || format!("{:?}", sol.status))?;
    let (grid, bound) = support::lattice_optimum(&config, &set, 0.5);
    ensure(sol.objective <= grid + 1e-9, || format!("LP {} above lattice {grid}", sol.objective))?;
    ensure(grid - sol.objective <= bound, || {
        format!("lattice {grid} exceeds LP {} by more than {bound}", sol.objective)
    })?;
    let took = within(start, Duration::from_secs(60))?;
    Ok(format!(
        "LP {:.6}, lattice {grid:.6}, bound {bound:.4}, in {took:.2?}",
        sol.objective
    ))
}

/// The case-study instance solved once and shared by several criteria.
struct CaseStudy {
    problem: mgs_core::LpProblem,
    schedule: mgs_core::Schedule,
    scenarios: ScenarioSet,
    worst_row: f64,
    worst_bound: f64,
    worst_balance: f64,
    worst_constraint: f64,
    took: Duration,
}

fn solve_case_study() -> Result<CaseStudy, String> {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let m = manifest("case_study/run.json", dir.path());
    let inputs = load_inputs(&m).map_err(|e| e.to_string())?;
    let solved = solve_instance(&inputs.config, &inputs.scenarios, &m.formulation, &m.solver).map_err(|e| e.to_string())?;
    let rep = check_point(&solved.problem, &solved.solution.primal, 1e-6);
    let mut worst_balance: f64 = 0.0;
    let mut worst_constraint: f64 = 0.0;
    for (sc, s) in inputs.scenarios.scenarios.iter().zip(&solved.schedule.scenarios) {
        let b = check_balance(&inputs.config, sc, &s.dispatch, 1e-6).map_err(|e| e.to_string())?;
        worst_balance = worst_balance.max(b.max_abs_power_residual).max((-b.min_heat_surplus).max(0.0));
        let c = check_schedule(&inputs.config, sc, s).map_err(|e| e.to_string())?;
        worst_constraint = worst_constraint.max(c.max_violation());
    }
    Ok(CaseStudy {
        problem: solved.problem,
        schedule: solved.schedule,
        scenarios: inputs.scenarios,
        worst_row: rep.max_row_violation,
        worst_bound: rep.max_bound_violation,
        worst_balance,
        worst_constraint,
        took: start.elapsed(),
    })
}

fn constraint_fidelity(cs: &Result<CaseStudy, String>) -> Outcome {
    let cs = cs.as_ref().map_err(Clone::clone)?;
    ensure(cs.scenarios.len() == 25, || format!("{} scenarios", cs.scenarios.len()))?;
    let worst = cs.worst_row.max(cs.worst_bound).max(cs.worst_balance).max(cs.worst_constraint);
    ensure(worst <= 1e-6, || format!("largest residual {worst:e}"))?;
    ensure(cs.took < Duration::from_secs(600), || format!("took {:.1?}", cs.took))?;
    Ok(format!(
        "{} rows x {} columns, largest residual {worst:.1e}, in {:.1?}",
        cs.problem.n_rows, cs.problem.n_cols, cs.took
    ))
}

fn non_increasing(values: &[f64], tol: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + tol)
}

fn solar_trend() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let m = manifest("small/solar_sweep.json", dir.path());
    let rows = run_solar_sweep(&m, &[0.0, 0.5, 1.0, 1.5, 2.0]).map_err(|e| e.to_string())?;
    let mut sto = Vec::new();
    let mut det = Vec::new();
    for r in &rows {
        let (s, d) = r
            .stochastic
            .zip(r.deterministic)
            .ok_or_else(|| format!("level {} failed: {:?}", r.level, r.error))?;
        ensure(s <= d + 1e-6, || format!("level {}: stochastic {s} above deterministic {d}", r.level))?;
        sto.push(s);
        det.push(d);
    }
    ensure(non_increasing(&sto, 1e-6), || format!("stochastic costs {sto:?}"))?;
    ensure(non_increasing(&det, 1e-6), || format!("deterministic costs {det:?}"))?;
    Ok(format!(
        "stochastic {} / deterministic {}",
        fmt_list(&sto),
        fmt_list(&det)
    ))
}

fn window_trend() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let m = manifest("small/window_sweep.json", dir.path());
    let rows = run_window_sweep(&m, &[2, 4, 8, 16, 24]).map_err(|e| e.to_string())?;
    let costs = rows
        .iter()
        .map(|r| r.cost.ok_or_else(|| format!("width {} failed: {:?}", r.width, r.error)))
        .collect::<Result<Vec<f64>, String>>()?;
    ensure(non_increasing(&costs, 1e-6), || format!("costs {costs:?}"))?;
    Ok(format!("widths 2..24: {}", fmt_list(&costs)))
}

fn vss_nonnegative() -> Outcome {
    let day_ahead = FormulationOptions {
        stage_mode: StageMode::DayAheadChp,
        ..Default::default()
    };
    let settings = SolveSettings::default();
    let mut sets = Vec::new();
    let (c, s) = support::micro_instance();
    sets.push(("micro".to_string(), c, s));
    for seed in [20240611u64, 7, 8] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut m = manifest("small/compare.json", dir.path());
        if let Some(mgs_cli::manifest::GenerationSource::Path(p)) = &m.generation {
            let text = fs::read_to_string(p).map_err(|e| e.to_string())?;
            let mut spec: mgs_core::GenerationSpec = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            spec.rng_seed = seed;
            m.generation = Some(mgs_cli::manifest::GenerationSource::Inline(spec));
        }
        let inputs = load_inputs(&m).map_err(|e| e.to_string())?;
        sets.push((format!("small seed {seed}"), inputs.config, inputs.scenarios));
    }
    for seed in [3u64, 4] {
        let (c, s) = support::synthetic_instance(6, 8, seed);
        sets.push((format!("synthetic seed {seed}"), c, s));
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let inputs = load_inputs(&manifest("case_study/compare.json", dir.path())).map_err(|e| e.to_string())?;
    sets.push(("case study".to_string(), inputs.config, inputs.scenarios));
    let mut vss = Vec::new();
    for (name, config, set) in &sets {
        let r = compare_policies(config, set, &day_ahead, &settings).map_err(|e| format!("{name}: {e}"))?;
        let v = r.vss.ok_or_else(|| format!("{name}: deterministic plan failed in {:?}", r.flagged))?;
        ensure(v >= -1e-6, || format!("{name}: VSS {v}"))?;
        vss.push(v);
    }
    Ok(format!("{} sets, VSS {}", sets.len(), fmt_list(&vss)))
}

fn reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut sets = 0;
    for n in 1..=10 {
        let (_, mut set) = support::synthetic_instance(3, n, rng.random());
        // Unequal weights exercise the probability redistribution.
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        for (sc, p) in set.scenarios.iter_mut().zip(&raw) {
            sc.probability = p / total;
        }
        let w = DistanceWeights::normalized(&set);
        let (same, rep) = reduce_fast_forward(&set, n, &w).map_err(|e| e.to_string())?;
        ensure(rep.kantorovich_distance == 0.0 && same == set, || format!("N = {n}: keep-all changed the set"))?;
        let mut prev = f64::INFINITY;
        for keep in 1..=n {
            let (_, rep) = reduce_fast_forward(&set, keep, &w).map_err(|e| e.to_string())?;
            ensure(rep.kantorovich_distance <= prev + 1e-12, || {
                format!("N = {n}: distance rises at keep = {keep}")
            })?;
            prev = rep.kantorovich_distance;
        }
        // Exhaustive argmin at every greedy step.
        let (_, rep) = reduce_fast_forward(&set, n, &w).map_err(|e| e.to_string())?;
        let mut kept: Vec<usize> = Vec::new();
        for (step, &chosen) in rep.selection_order.iter().enumerate() {
            let mut best = (f64::INFINITY, usize::MAX);
            for u in (0..n).filter(|u| !kept.contains(u)) {
                let mut trial = kept.clone();
                trial.push(u);
                trial.sort_unstable();
                let d = kantorovich_distance(&set, &trial, &w).map_err(|e| e.to_string())?;
                if d < best.0 - 1e-12 {
                    best = (d, u);
                }
            }
            ensure(best.1 == chosen, || {
                format!("N = {n}, step {step}: greedy chose {chosen}, exhaustive argmin {}", best.1)
            })?;
            kept.push(chosen);
        }
        sets += 1;
    }
    Ok(format!("{sets} random sets, N = 1..10"))
}

fn exclusivity(cs: &Result<CaseStudy, String>) -> Outcome {
    let cs = cs.as_ref().map_err(Clone::clone)?;
    let mut worst: f64 = 0.0;
    for s in &cs.schedule.scenarios {
        for (b, v) in s.dispatch.grid_buy.iter().zip(&s.dispatch.grid_sell) {
            worst = worst.max(b * v);
        }
    }
    ensure(worst <= 1e-6, || format!("largest buy x sell {worst:e}"))?;
    Ok(format!("largest buy x sell {worst:.1e} over {} scenarios", cs.schedule.scenarios.len()))
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let files = ["solution.json", "balance_report.json", "scenarios.json", "reduction_report.json"];
    for dir in [a.path(), b.path()] {
        run_single(&manifest("small/run.json", dir)).map_err(|e| e.to_string())?;
        run_solar_sweep(&manifest("small/solar_sweep.json", dir), &[0.0, 1.0, 2.0]).map_err(|e| e.to_string())?;
        run_window_sweep(&manifest("small/window_sweep.json", dir), &[2, 8, 24]).map_err(|e| e.to_string())?;
    }
    for name in files.iter().chain(&["solar_sweep.csv", "window_sweep.csv"]) {
        let x = fs::read(a.path().join(name)).map_err(|e| format!("{name}: {e}"))?;
        let y = fs::read(b.path().join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(x == y, || format!("{name} differs between runs"))?;
    }
    Ok("solution, reports and sweep tables byte-identical".into())
}

fn mps_round_trip(cs: &Result<CaseStudy, String>) -> Outcome {
    for (name, problem) in support::mps_fixtures() {
        let path = support::fixture_dir().join(format!("{name}.mps"));
        let golden = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let text = export_mps(&problem);
        ensure(text == golden, || format!("{name}: export differs from golden file"))?;
        let again = export_mps(&parse_mps(&golden).map_err(|e| e.to_string())?);
        ensure(again == golden, || format!("{name}: re-export differs"))?;
    }
    let cs = cs.as_ref().map_err(Clone::clone)?;
    let text = export_mps(&cs.problem);
    let again = export_mps(&parse_mps(&text).map_err(|e| e.to_string())?);
    ensure(again == text, || "case study: re-export differs".into())?;
    Ok(format!("3 golden fixtures plus the case study ({} bytes)", text.len()))
}

fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn run(id: usize, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    match result {
        Ok(detail) => {
            println!("PASS {id:>2} {title}: {detail}");
            true
        }
        Err(why) => {
            println!("FAIL {id:>2} {title}: {why}");
            false
        }
    }
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let wanted = |id: usize| filter.is_empty() || filter.iter().any(|f| f == &id.to_string());
    let needs_case_study = [4, 9, 11].iter().any(|&i| wanted(i));
    let case_study = if needs_case_study {
        solve_case_study()
    } else {
        Err("not run".into())
    };
    let criteria: Vec<(usize, &str, Box<dyn FnOnce() -> Outcome + '_>)> = vec![
        (1, "LP matches vertex enumeration", Box::new(lp_oracle)),
        (2, "MILP matches exhaustive enumeration", Box::new(milp_oracle)),
        (3, "micro-instance matches lattice search", Box::new(micro_instance)),
        (4, "case-study constraint fidelity", Box::new(|| constraint_fidelity(&case_study))),
        (5, "solar sweep trend", Box::new(solar_trend)),
        (6, "window sweep trend", Box::new(window_trend)),
        (7, "value of the stochastic solution", Box::new(vss_nonnegative)),
        (8, "fast forward reduction", Box::new(reduction)),
        (9, "buy/sell exclusivity", Box::new(|| exclusivity(&case_study))),
        (10, "determinism", Box::new(determinism)),
        (11, "MPS round trip", Box::new(|| mps_round_trip(&case_study))),
    ];
    let mut failed = 0;
    for (id, title, f) in criteria {
        if wanted(id) && !run(id, title, f) {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
