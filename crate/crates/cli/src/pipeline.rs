//! Ingestion, scenario preparation, solving and the three experiments.

use std::fs;
use std::path::Path;

use log::{info, warn};
use mgs_core::formulation::{self, RowKind, RowMap, VarKind};
use mgs_core::lpcore::check_point;
use mgs_core::lpcore::mps::export_mps;
use mgs_core::model::{check_schedule, scenario_cost, BalanceReport, ConstraintReport, CostBreakdown};
use mgs_core::scenario::{reduce_fast_forward, DistanceWeights, ReductionReport, ScenarioSet};
use mgs_core::{
    check_balance, generate, io, solve_milp, validate_config, FormulationOptions, GenerationSpec, LpProblem,
    LpSolution, LpStatus, MicrogridConfig, Schedule, SolveSettings, VariableIndex,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{write_atomic, write_json};
use crate::manifest::{GenerationSource, RunManifest};
use crate::PipelineError;

/// Residual tolerance every emitted schedule must meet.
pub const BALANCE_TOL: f64 = 1e-6;

pub struct Inputs {
    pub config: MicrogridConfig,
    pub scenarios: ScenarioSet,
    pub reduction: Option<ReductionReport>,
}

pub fn load_config(path: &Path) -> Result<MicrogridConfig, PipelineError> {
    let config = io::load_config(path).map_err(|e| PipelineError::Ingest(e.to_string()))?;
    let report = validate_config(&config);
    for w in &report.warnings {
        warn!("{}: {}", w.code, w.message);
    }
    report
        .into_result()
        .map_err(|e| PipelineError::Ingest(format!("{}: {e}", path.display())))?;
    Ok(config)
}

pub fn load_generation_spec(source: &GenerationSource) -> Result<GenerationSpec, PipelineError> {
    match source {
        GenerationSource::Inline(spec) => Ok(spec.clone()),
        GenerationSource::Path(p) => {
            let text = fs::read_to_string(p).map_err(|e| PipelineError::Ingest(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| PipelineError::Ingest(format!("{}: {e}", p.display())))
        }
    }
}

/// Reads a scenario set from a JSON file or a CSV bundle directory.
pub fn load_scenarios(path: &Path) -> Result<ScenarioSet, PipelineError> {
    let ingest = |e: mgs_core::scenario::ScenarioError| PipelineError::Ingest(format!("{}: {e}", path.display()));
    if path.is_dir() {
        ScenarioSet::read_csv_bundle(path).map_err(ingest)
    } else {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Ingest(format!("{}: {e}", path.display())))?;
        ScenarioSet::from_json(&text).map_err(ingest)
    }
}

/// Generates and reduces scenarios, or loads a ready set.
pub fn load_inputs(m: &RunManifest) -> Result<Inputs, PipelineError> {
    let config = load_config(&m.config)?;
    if let Some(path) = &m.scenarios {
        let scenarios = load_scenarios(path)?;
        formulation::check_inputs(&config, &scenarios).map_err(|e| PipelineError::Ingest(e.to_string()))?;
        return Ok(Inputs {
            config,
            scenarios,
            reduction: None,
        });
    }
    let source = m
        .generation
        .as_ref()
        .ok_or_else(|| PipelineError::Ingest("no scenario source".into()))?;
    let spec = load_generation_spec(source)?;
    let full = generate(&spec, &config, m.generate).map_err(|e| PipelineError::Ingest(e.to_string()))?;
    info!("generated {} scenarios", full.len());
    let weights = m.distance_weights.unwrap_or_else(|| DistanceWeights::normalized(&full));
    let (scenarios, report) =
        reduce_fast_forward(&full, m.keep, &weights).map_err(|e| PipelineError::Ingest(e.to_string()))?;
    info!(
        "reduced to {} scenarios, Kantorovich distance {}",
        scenarios.len(),
        report.kantorovich_distance
    );
    Ok(Inputs {
        config,
        scenarios,
        reduction: Some(report),
    })
}

/// Names of rows involved in an infeasible solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityReport {
    /// Power and heat balance rows that cannot be met.
    pub balance_rows: Vec<String>,
    /// Rows still violated when the solver gave up on feasibility.
    pub solver_rows: Vec<String>,
}

/// Balance rows that fail for capacity reasons alone: even the extreme
/// dispatch of every unit cannot close them.
pub fn capacity_shortfalls(config: &MicrogridConfig, scenarios: &ScenarioSet, options: &FormulationOptions) -> Vec<String> {
    let mut out = Vec::new();
    let max_chp: f64 = config.chp_units.iter().map(|u| u.p_max).sum();
    let min_chp: f64 = config.chp_units.iter().map(|u| u.p_min).sum();
    let max_heat: f64 = config.chp_units.iter().map(|u| u.alpha * u.p_max).sum();
    for (s, sc) in scenarios.scenarios.iter().enumerate() {
        for t in 0..config.horizon {
            let present = |m: usize| options.parking_mode == mgs_core::ParkingMode::DecisionBinary || sc.parking[m][t];
            let discharge: f64 = (0..config.phevs.len())
                .filter(|&m| present(m))
                .map(|m| config.phevs[m].discharge_rate_max)
                .sum();
            let charge: f64 = (0..config.phevs.len())
                .filter(|&m| present(m))
                .map(|m| config.phevs[m].charge_rate_max)
                .sum();
            let (serve_min, serve_max) = config
                .deferrables
                .iter()
                .filter(|d| d.in_window(t))
                .fold((0.0, 0.0), |(a, b), d| (a + d.rate_min, b + d.rate_max));
            let cap = config.tariff.exchange_cap[t];
            let curtail = if options.curtailment_penalty.is_some() { sc.solar[t] } else { 0.0 };
            let supply_max = max_chp + discharge + sc.solar[t] + cap;
            let demand_min = config.base_power[t] + serve_min;
            let supply_min = min_chp + sc.solar[t];
            let demand_max = config.base_power[t] + serve_max + charge + cap + curtail;
            if supply_max < demand_min || supply_min > demand_max {
                out.push(format!("bal{t}_{s}"));
            }
            if max_heat < config.base_heat[t] {
                out.push(format!("heat{t}_{s}"));
            }
        }
    }
    out
}

pub struct Solved {
    pub problem: LpProblem,
    pub index: VariableIndex,
    pub rows: RowMap,
    pub solution: LpSolution,
    pub schedule: Schedule,
    pub balance: Vec<BalanceReport>,
    pub constraints: Vec<ConstraintReport>,
}

fn infeasibility(
    config: &MicrogridConfig,
    scenarios: &ScenarioSet,
    options: &FormulationOptions,
    problem: &LpProblem,
    rows: &RowMap,
    solution: &LpSolution,
) -> InfeasibilityReport {
    let solver_rows: Vec<String> = solution.infeasible_rows.iter().map(|&r| problem.row_name(r)).collect();
    let mut balance_rows = capacity_shortfalls(config, scenarios, options);
    for &r in &solution.infeasible_rows {
        if matches!(rows.kind(r), Some(RowKind::PowerBalance | RowKind::HeatBalance)) {
            let name = problem.row_name(r);
            if !balance_rows.contains(&name) {
                balance_rows.push(name);
            }
        }
    }
    InfeasibilityReport {
        balance_rows,
        solver_rows,
    }
}

/// Builds, solves and verifies one instance. The returned schedule has
/// passed the balance check and the full constraint check.
pub fn solve_instance(
    config: &MicrogridConfig,
    scenarios: &ScenarioSet,
    options: &FormulationOptions,
    settings: &SolveSettings,
) -> Result<Solved, PipelineError> {
    let (problem, index, rows) = formulation::build(config, scenarios, options)?;
    solve_built(config, scenarios, options, settings, problem, index, rows)
}

fn solve_built(
    config: &MicrogridConfig,
    scenarios: &ScenarioSet,
    options: &FormulationOptions,
    settings: &SolveSettings,
    problem: LpProblem,
    index: VariableIndex,
    rows: RowMap,
) -> Result<Solved, PipelineError> {
    let solution = solve_milp(&problem, settings).map_err(|e| PipelineError::Other(e.to_string()))?;
    match solution.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(PipelineError::Infeasible(infeasibility(
                config, scenarios, options, &problem, &rows, &solution,
            )))
        }
        LpStatus::Unbounded => return Err(PipelineError::Other("problem is unbounded".into())),
        LpStatus::Limit => return Err(PipelineError::Limit("solver stopped at a limit".into())),
    }
    let feas = check_point(&problem, &solution.primal, BALANCE_TOL);
    if !feas.is_feasible() {
        return Err(PipelineError::Other(format!(
            "solution violates the problem: rows {:e}, bounds {:e}",
            feas.max_row_violation, feas.max_bound_violation
        )));
    }
    let schedule = formulation::extract_schedule(&solution, &index, config, scenarios)?;
    let mut balance = Vec::with_capacity(scenarios.len());
    let mut constraints = Vec::with_capacity(scenarios.len());
    for (s, (sc, sched)) in scenarios.scenarios.iter().zip(&schedule.scenarios).enumerate() {
        let rep = check_balance(config, sc, &sched.dispatch, BALANCE_TOL).map_err(|e| PipelineError::Other(e.to_string()))?;
        if let Some(p) = rep.flagged().next() {
            return Err(PipelineError::Other(format!(
                "scenario {s}, period {}: balance residual {:e}, heat surplus {:e}",
                p.period, p.power_residual, p.heat_surplus
            )));
        }
        let cons = check_schedule(config, sc, sched).map_err(|e| PipelineError::Other(e.to_string()))?;
        if cons.max_violation() > BALANCE_TOL {
            return Err(PipelineError::Other(format!("scenario {s}: constraint violation {cons:?}")));
        }
        balance.push(rep);
        constraints.push(cons);
    }
    Ok(Solved {
        problem,
        index,
        rows,
        solution,
        schedule,
        balance,
        constraints,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub nodes: usize,
    pub best_bound: f64,
    pub gap: f64,
    pub rows: usize,
    pub columns: usize,
    pub binaries: usize,
}

#[derive(Serialize)]
struct ScenarioDoc<'a> {
    probability: f64,
    cost: CostBreakdown,
    curtailed_kwh: f64,
    schedule: &'a mgs_core::ScenarioSchedule,
}

#[derive(Serialize)]
struct SolutionDoc<'a> {
    status: LpStatus,
    /// Solver objective, including any curtailment penalty.
    objective: f64,
    /// Probability-weighted operating cost.
    expected_cost: f64,
    options: &'a FormulationOptions,
    solve: SolveReport,
    scenarios: Vec<ScenarioDoc<'a>>,
}

#[derive(Serialize)]
struct BalanceDoc<'a> {
    tolerance: f64,
    scenarios: Vec<BalanceEntry<'a>>,
}

#[derive(Serialize)]
struct BalanceEntry<'a> {
    scenario: usize,
    balance: &'a BalanceReport,
    constraints: &'a ConstraintReport,
}

impl Solved {
    pub fn report(&self) -> SolveReport {
        let mip = self.solution.mip.as_ref();
        SolveReport {
            iterations: self.solution.iterations,
            nodes: mip.map_or(0, |m| m.nodes),
            best_bound: mip.map_or(self.solution.objective, |m| m.best_bound),
            gap: mip.map_or(0.0, |m| m.gap),
            rows: self.problem.n_rows,
            columns: self.problem.n_cols,
            binaries: self.problem.binary_cols.len(),
        }
    }

    pub fn expected_cost(&self, config: &MicrogridConfig, scenarios: &ScenarioSet) -> Result<f64, PipelineError> {
        mgs_core::evaluate_cost(config, scenarios, &self.schedule).map_err(|e| PipelineError::Other(e.to_string()))
    }
}

pub struct SingleOutcome {
    pub inputs: Inputs,
    pub solved: Solved,
    pub expected_cost: f64,
}

/// Solves the manifest's instance and writes `solution.json`,
/// `balance_report.json`, `scenarios.json`, the reduction report when
/// scenarios were reduced, and `problem.mps` when requested.
pub fn run_single(m: &RunManifest) -> Result<SingleOutcome, PipelineError> {
    let inputs = load_inputs(m)?;
    let out = &m.output;
    fs::create_dir_all(out).map_err(|e| PipelineError::Other(format!("{}: {e}", out.display())))?;
    write_json(&out.join("scenarios.json"), &inputs.scenarios)?;
    if let Some(r) = &inputs.reduction {
        write_json(&out.join("reduction_report.json"), r)?;
    }
    let (problem, index, rows) = formulation::build(&inputs.config, &inputs.scenarios, &m.formulation)?;
    info!("problem has {} rows and {} columns", problem.n_rows, problem.n_cols);
    if m.write_mps {
        write_atomic(&out.join("problem.mps"), export_mps(&problem).as_bytes())?;
    }
    let solved = match solve_built(
        &inputs.config,
        &inputs.scenarios,
        &m.formulation,
        &m.solver,
        problem,
        index,
        rows,
    ) {
        Err(PipelineError::Infeasible(rep)) => {
            write_json(&out.join("infeasibility_report.json"), &rep)?;
            return Err(PipelineError::Infeasible(rep));
        }
        other => other?,
    };
    let expected_cost = solved.expected_cost(&inputs.config, &inputs.scenarios)?;
    let mut scenarios = Vec::new();
    for (sc, sched) in inputs.scenarios.scenarios.iter().zip(&solved.schedule.scenarios) {
        scenarios.push(ScenarioDoc {
            probability: sc.probability,
            cost: scenario_cost(&inputs.config, &sched.dispatch).map_err(|e| PipelineError::Other(e.to_string()))?,
            curtailed_kwh: sched.dispatch.curtail.iter().sum::<f64>() * inputs.config.period_hours,
            schedule: sched,
        });
    }
    let doc = SolutionDoc {
        status: solved.solution.status,
        objective: solved.solution.objective,
        expected_cost,
        options: &m.formulation,
        solve: solved.report(),
        scenarios,
    };
    write_json(&out.join("solution.json"), &doc)?;
    let balance = BalanceDoc {
        tolerance: BALANCE_TOL,
        scenarios: solved
            .balance
            .iter()
            .zip(&solved.constraints)
            .enumerate()
            .map(|(scenario, (balance, constraints))| BalanceEntry {
                scenario,
                balance,
                constraints,
            })
            .collect(),
    };
    write_json(&out.join("balance_report.json"), &balance)?;
    Ok(SingleOutcome {
        inputs,
        solved,
        expected_cost,
    })
}

/// Default curtailment penalty for policy comparisons: ten times the
/// highest buying price.
pub fn default_penalty(config: &MicrogridConfig) -> f64 {
    let max_buy = config.tariff.price_buy.iter().cloned().fold(0.0, f64::max);
    if max_buy > 0.0 {
        10.0 * max_buy
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedScenario {
    pub scenario: usize,
    pub probability: f64,
    /// Cost of the deterministic plan with recourse, penalty included.
    pub cost: Option<f64>,
    pub curtailed_kwh: f64,
    /// The plan needed curtailment or could not be completed here.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    /// Expected cost of the stochastic solution.
    pub stochastic_cost: f64,
    /// Cost of the mean-scenario problem itself.
    pub expected_value_cost: f64,
    /// Expected cost of the mean-scenario CHP plan with optimal recourse.
    pub deterministic_cost: Option<f64>,
    /// Value of the stochastic solution: deterministic minus stochastic.
    pub vss: Option<f64>,
    pub curtailment_penalty: f64,
    pub scenarios: Vec<EvaluatedScenario>,
    pub flagged: Vec<usize>,
}

/// Stochastic solution against the mean-scenario plan.
///
/// Both sides allow curtailment at the same penalty. The deterministic plan
/// fixes CHP output to the mean-scenario optimum; every other decision is
/// re-optimized scenario by scenario.
pub fn compare_policies(
    config: &MicrogridConfig,
    scenarios: &ScenarioSet,
    options: &FormulationOptions,
    settings: &SolveSettings,
) -> Result<CompareReport, PipelineError> {
    let penalty = options.curtailment_penalty.unwrap_or_else(|| default_penalty(config));
    let opts = FormulationOptions {
        curtailment_penalty: Some(penalty),
        ..*options
    };
    let stochastic = solve_instance(config, scenarios, &opts, settings)?;
    let mean = ScenarioSet::new(vec![scenarios.expected_scenario()]);
    let ev = solve_instance(config, &mean, &opts, settings)?;
    let plan = &ev.schedule.scenarios[0].dispatch.chp_power;

    let evaluated: Vec<EvaluatedScenario> = scenarios
        .scenarios
        .par_iter()
        .enumerate()
        .map(|(s, sc)| {
            let single = ScenarioSet::new(vec![mgs_core::Scenario {
                probability: 1.0,
                ..sc.clone()
            }]);
            let result = formulation::build(config, &single, &opts).map_err(PipelineError::from).and_then(
                |(mut problem, index, rows)| {
                    for (i, unit) in config.chp_units.iter().enumerate() {
                        for t in 0..config.horizon {
                            let c = index.col(VarKind::Chp, i, t, 0).expect("chp column");
                            let v = plan[i][t].clamp(unit.p_min, unit.p_max);
                            problem.col_lower[c] = v;
                            problem.col_upper[c] = v;
                        }
                    }
                    solve_built(config, &single, &opts, settings, problem, index, rows)
                },
            );
            match result {
                Ok(solved) => {
                    let curtailed: f64 = solved.schedule.scenarios[0].dispatch.curtail.iter().sum::<f64>() * config.period_hours;
                    EvaluatedScenario {
                        scenario: s,
                        probability: sc.probability,
                        cost: Some(solved.solution.objective),
                        curtailed_kwh: curtailed,
                        flagged: curtailed > 1e-9,
                    }
                }
                Err(e) => {
                    warn!("deterministic plan fails in scenario {s}: {e}");
                    EvaluatedScenario {
                        scenario: s,
                        probability: sc.probability,
                        cost: None,
                        curtailed_kwh: 0.0,
                        flagged: true,
                    }
                }
            }
        })
        .collect();
    let deterministic_cost = evaluated
        .iter()
        .map(|e| e.cost.map(|c| e.probability * c))
        .sum::<Option<f64>>();
    let stochastic_cost = stochastic.solution.objective;
    Ok(CompareReport {
        stochastic_cost,
        expected_value_cost: ev.solution.objective,
        deterministic_cost,
        vss: deterministic_cost.map(|d| d - stochastic_cost),
        curtailment_penalty: penalty,
        flagged: evaluated.iter().filter(|e| e.flagged).map(|e| e.scenario).collect(),
        scenarios: evaluated,
    })
}

/// Writes `compare.json`.
pub fn run_compare(m: &RunManifest) -> Result<CompareReport, PipelineError> {
    let inputs = load_inputs(m)?;
    let report = compare_policies(&inputs.config, &inputs.scenarios, &m.formulation, &m.solver)?;
    fs::create_dir_all(&m.output).map_err(|e| PipelineError::Other(format!("{}: {e}", m.output.display())))?;
    write_json(&m.output.join("compare.json"), &report)?;
    Ok(report)
}

/// Scales installed capacity and every scenario's solar output by `level`.
pub fn scale_solar(config: &MicrogridConfig, scenarios: &ScenarioSet, level: f64) -> (MicrogridConfig, ScenarioSet) {
    let mut c = config.clone();
    c.solar_capacity *= level;
    let mut s = scenarios.clone();
    for sc in &mut s.scenarios {
        for w in &mut sc.solar {
            *w *= level;
        }
    }
    (c, s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolarRow {
    pub level: f64,
    pub stochastic: Option<f64>,
    pub deterministic: Option<f64>,
    pub error: Option<String>,
}

/// One comparison per level on the same reduced scenarios; writes
/// `solar_sweep.csv`.
pub fn run_solar_sweep(m: &RunManifest, levels: &[f64]) -> Result<Vec<SolarRow>, PipelineError> {
    crate::manifest::check_sorted("levels", levels, |&l| l >= 0.0 && l.is_finite())?;
    let inputs = load_inputs(m)?;
    let rows: Vec<SolarRow> = levels
        .par_iter()
        .map(|&level| {
            let (c, s) = scale_solar(&inputs.config, &inputs.scenarios, level);
            match compare_policies(&c, &s, &m.formulation, &m.solver) {
                Ok(r) => SolarRow {
                    level,
                    stochastic: Some(r.stochastic_cost),
                    deterministic: r.deterministic_cost,
                    error: (!r.flagged.is_empty()).then(|| format!("recourse flagged in scenarios {:?}", r.flagged)),
                },
                Err(e) => SolarRow {
                    level,
                    stochastic: None,
                    deterministic: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["level", "stochastic_cost", "deterministic_cost", "error"])
        .map_err(csv_err)?;
    for r in &rows {
        w.write_record([
            r.level.to_string(),
            opt_num(r.stochastic),
            opt_num(r.deterministic),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    finish_csv(w, &m.output, "solar_sweep.csv")?;
    Ok(rows)
}

/// Stretches every deferrable window to `width` periods, growing or
/// shrinking both ends evenly (the extra period goes to the right) and
/// clamping to the horizon.
pub fn widen_windows(config: &MicrogridConfig, width: usize) -> MicrogridConfig {
    let mut c = config.clone();
    let t_len = config.horizon as i64;
    for d in &mut c.deferrables {
        let extra = width as i64 - d.window_len() as i64;
        let left = extra.div_euclid(2);
        let right = extra - left;
        let mut a = d.t_arrive as i64 - left;
        let mut b = d.t_depart as i64 + right;
        if a < 1 {
            b += 1 - a;
            a = 1;
        }
        if b > t_len {
            a -= b - t_len;
            b = t_len;
        }
        d.t_arrive = a.max(1) as usize;
        d.t_depart = b.max(a.max(1)) as usize;
    }
    c
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub width: usize,
    pub cost: Option<f64>,
    pub error: Option<String>,
}

/// Stochastic cost per window width; writes `window_sweep.csv`.
pub fn run_window_sweep(m: &RunManifest, widths: &[usize]) -> Result<Vec<WindowRow>, PipelineError> {
    crate::manifest::check_sorted("widths", widths, |&w| w >= 1)?;
    let inputs = load_inputs(m)?;
    let rows: Vec<WindowRow> = widths
        .par_iter()
        .map(|&width| {
            let c = widen_windows(&inputs.config, width);
            let result = solve_instance(&c, &inputs.scenarios, &m.formulation, &m.solver)
                .and_then(|solved| Ok(solved.solution.objective));
            match result {
                Ok(cost) => WindowRow {
                    width,
                    cost: Some(cost),
                    error: None,
                },
                Err(e) => WindowRow {
                    width,
                    cost: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["width", "cost", "error"]).map_err(csv_err)?;
    for r in &rows {
        w.write_record([r.width.to_string(), opt_num(r.cost), r.error.clone().unwrap_or_default()])
            .map_err(csv_err)?;
    }
    finish_csv(w, &m.output, "window_sweep.csv")?;
    Ok(rows)
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> PipelineError {
    PipelineError::Other(e.to_string())
}

fn finish_csv(w: csv::Writer<Vec<u8>>, dir: &Path, name: &str) -> Result<(), PipelineError> {
    let bytes = w.into_inner().map_err(|e| PipelineError::Other(e.to_string()))?;
    fs::create_dir_all(dir).map_err(|e| PipelineError::Other(format!("{}: {e}", dir.display())))?;
    write_atomic(&dir.join(name), &bytes)
}

/// Builds the manifest's problem and writes it as `problem.mps`.
pub fn run_export_mps(m: &RunManifest) -> Result<std::path::PathBuf, PipelineError> {
    let inputs = load_inputs(m)?;
    let (problem, _, _) = formulation::build(&inputs.config, &inputs.scenarios, &m.formulation)?;
    fs::create_dir_all(&m.output).map_err(|e| PipelineError::Other(format!("{}: {e}", m.output.display())))?;
    let path = m.output.join("problem.mps");
    write_atomic(&path, export_mps(&problem).as_bytes())?;
    Ok(path)
}
