//! Deterministic-equivalent assembly and solution extraction.
//!
//! Columns are laid out kind by kind in the order of [`VarKind::ALL`];
//! within a kind the order is scenario, then period, then unit. Rows follow
//! the same scheme with the kinds of [`RowKind::ALL`]. For `S` scenarios,
//! `T` periods, `N_c` CHP units, `N_p` vehicles and `N_j` deferrable loads:
//!
//! ```text
//! columns = S*T*(N_c + 3*N_p + N_j + 2)
//!         + S*T        with curtailment
//!         + S*T*N_p    with decision-binary parking
//!         + S*T*N_p    with exclusivity binaries
//! rows    = S*(T*N_p + N_p + N_j + 2*T)
//!         + 2*S*T*N_p  with decision-binary parking
//!         + 2*S*T*N_p  with exclusivity binaries
//!         + (S-1)*T*N_c  in day-ahead-chp mode
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lpcore::{LpProblem, LpSolution, LpStatus, RowSense};
use crate::model::{
    check_scenario, storage_trajectory, validate_config, Dispatch, MicrogridConfig, ScenarioSchedule, Schedule,
};
use crate::scenario::ScenarioSet;

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("solution status is {0:?}")]
    Status(LpStatus),
    #[error("solution has {got} values, problem has {expected} columns")]
    SolutionSize { got: usize, expected: usize },
    #[error("storage column {column} deviates from the recursion by {deviation}")]
    StorageMismatch { column: String, deviation: f64 },
    #[error("self-audit failed: {0}")]
    Audit(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageMode {
    /// Every decision adapts to its scenario.
    #[default]
    FullyAdaptive,
    /// CHP output is fixed before the scenario is revealed.
    DayAheadChp,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParkingMode {
    /// Availability is scenario data.
    #[default]
    ScenarioData,
    /// Connection is a binary decision, allowed only while the vehicle is
    /// present in the scenario.
    DecisionBinary,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FormulationOptions {
    pub stage_mode: StageMode,
    pub parking_mode: ParkingMode,
    pub exclusivity_binaries: bool,
    /// Cost per kWh of discarded solar; enables the curtailment column.
    pub curtailment_penalty: Option<f64>,
}

impl FormulationOptions {
    pub fn check(&self, config: &MicrogridConfig) -> Result<(), FormulationError> {
        if let Some(pen) = self.curtailment_penalty {
            let max_buy = config.tariff.price_buy.iter().cloned().fold(0.0, f64::max);
            if !(pen > max_buy && pen.is_finite()) {
                return Err(FormulationError::InvalidOptions(format!(
                    "curtailment penalty {pen} must exceed the highest buying price {max_buy}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    Chp,
    Charge,
    Discharge,
    Storage,
    Serve,
    Buy,
    Sell,
    Curtail,
    Park,
    Mode,
}

impl VarKind {
    pub const ALL: [VarKind; 10] = [
        VarKind::Chp,
        VarKind::Charge,
        VarKind::Discharge,
        VarKind::Storage,
        VarKind::Serve,
        VarKind::Buy,
        VarKind::Sell,
        VarKind::Curtail,
        VarKind::Park,
        VarKind::Mode,
    ];

    fn prefix(self) -> &'static str {
        match self {
            VarKind::Chp => "p",
            VarKind::Charge => "rc",
            VarKind::Discharge => "rd",
            VarKind::Storage => "e",
            VarKind::Serve => "l",
            VarKind::Buy => "gb",
            VarKind::Sell => "gs",
            VarKind::Curtail => "cu",
            VarKind::Park => "pk",
            VarKind::Mode => "u",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowKind {
    StorageDynamics,
    Terminal,
    DeferrableEnergy,
    PowerBalance,
    HeatBalance,
    ParkCharge,
    ParkDischarge,
    ModeCharge,
    ModeDischarge,
    Nonanticipativity,
}

impl RowKind {
    pub const ALL: [RowKind; 10] = [
        RowKind::StorageDynamics,
        RowKind::Terminal,
        RowKind::DeferrableEnergy,
        RowKind::PowerBalance,
        RowKind::HeatBalance,
        RowKind::ParkCharge,
        RowKind::ParkDischarge,
        RowKind::ModeCharge,
        RowKind::ModeDischarge,
        RowKind::Nonanticipativity,
    ];
}

/// Every quantity of the stochastic program and where it lives.
pub const SYMBOL_MAP: &[(&str, &str)] = &[
    ("p_{i,t}^s", "column Chp"),
    ("r^+_{m,t}^s", "column Charge"),
    ("r^-_{m,t}^s", "column Discharge"),
    ("E_{m,t}^s", "column Storage"),
    ("l_{j,t}^s", "column Serve"),
    ("g^buy_t^s", "column Buy"),
    ("g^sell_t^s", "column Sell"),
    ("I_{m,t}^s", "scenario parking, or column Park in decision-binary mode"),
    ("w_t^s", "scenario solar"),
    ("L_j^s", "scenario deferrable_energy"),
    ("rho_s", "scenario probability"),
    ("P_min_i, P_max_i", "ChpUnit p_min, p_max"),
    ("c_i", "ChpUnit cost_per_kwh"),
    ("alpha_i", "ChpUnit alpha"),
    ("E_min_m, E_max_m, E0_m", "Phev e_min, e_max, e_initial"),
    ("R^+_m, R^-_m", "Phev charge_rate_max, discharge_rate_max"),
    ("eta^+_m, eta^-_m", "Phev eta_charge, eta_discharge"),
    ("c_m", "Phev degradation_cost_per_kwh"),
    ("a_j, d_j", "DeferrableLoad t_arrive, t_depart"),
    ("l_min_j, l_max_j", "DeferrableLoad rate_min, rate_max"),
    ("pi^buy_t, pi^sell_t", "GridTariff price_buy, price_sell"),
    ("g_max_t", "GridTariff exchange_cap"),
    ("P0_t, Q_t", "MicrogridConfig base_power, base_heat"),
    ("dt", "MicrogridConfig period_hours"),
];

/// Bijection between symbolic variables and column ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableIndex {
    pub scenarios: usize,
    pub periods: usize,
    pub chp: usize,
    pub phevs: usize,
    pub deferrables: usize,
    pub options: FormulationOptions,
    offsets: Vec<(VarKind, usize, usize)>,
    n_cols: usize,
}

impl VariableIndex {
    pub fn new(config: &MicrogridConfig, scenarios: usize, options: FormulationOptions) -> Self {
        let mut idx = VariableIndex {
            scenarios,
            periods: config.horizon,
            chp: config.chp_units.len(),
            phevs: config.phevs.len(),
            deferrables: config.deferrables.len(),
            options,
            offsets: Vec::new(),
            n_cols: 0,
        };
        let mut next = 0;
        for kind in VarKind::ALL {
            if let Some(units) = idx.units(kind) {
                let size = scenarios * idx.periods * units;
                idx.offsets.push((kind, next, units));
                next += size;
            }
        }
        idx.n_cols = next;
        idx
    }

    /// Units per (scenario, period) of `kind`, or `None` when absent.
    pub fn units(&self, kind: VarKind) -> Option<usize> {
        match kind {
            VarKind::Chp => Some(self.chp),
            VarKind::Charge | VarKind::Discharge | VarKind::Storage => Some(self.phevs),
            VarKind::Serve => Some(self.deferrables),
            VarKind::Buy | VarKind::Sell => Some(1),
            VarKind::Curtail => self.options.curtailment_penalty.map(|_| 1),
            VarKind::Park => (self.options.parking_mode == ParkingMode::DecisionBinary).then_some(self.phevs),
            VarKind::Mode => self.options.exclusivity_binaries.then_some(self.phevs),
        }
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn col(&self, kind: VarKind, unit: usize, t: usize, s: usize) -> Option<usize> {
        let &(_, off, units) = self.offsets.iter().find(|o| o.0 == kind)?;
        (unit < units && t < self.periods && s < self.scenarios).then(|| off + (s * self.periods + t) * units + unit)
    }

    /// Inverse of [`col`](Self::col): `(kind, unit, period, scenario)`.
    pub fn key(&self, col: usize) -> Option<(VarKind, usize, usize, usize)> {
        let &(kind, off, units) = self.offsets.iter().rev().find(|o| o.1 <= col)?;
        if units == 0 {
            return None;
        }
        let local = col - off;
        let (unit, rest) = (local % units, local / units);
        let (t, s) = (rest % self.periods, rest / self.periods);
        (s < self.scenarios).then_some((kind, unit, t, s))
    }

    pub fn col_label(&self, col: usize) -> String {
        match self.key(col) {
            Some((kind, unit, t, s)) => match kind {
                VarKind::Buy | VarKind::Sell | VarKind::Curtail => format!("{}{t}_{s}", kind.prefix()),
                _ => format!("{}{unit}_{t}_{s}", kind.prefix()),
            },
            None => format!("col{col}"),
        }
    }

    /// Closed-form column count.
    pub fn expected_cols(&self) -> usize {
        let (s, t) = (self.scenarios, self.periods);
        let mut n = s * t * (self.chp + 3 * self.phevs + self.deferrables + 2);
        if self.options.curtailment_penalty.is_some() {
            n += s * t;
        }
        if self.options.parking_mode == ParkingMode::DecisionBinary {
            n += s * t * self.phevs;
        }
        if self.options.exclusivity_binaries {
            n += s * t * self.phevs;
        }
        n
    }

    /// Closed-form row count.
    pub fn expected_rows(&self) -> usize {
        let (s, t) = (self.scenarios, self.periods);
        let mut n = s * (t * self.phevs + self.phevs + self.deferrables + 2 * t);
        if self.options.parking_mode == ParkingMode::DecisionBinary {
            n += 2 * s * t * self.phevs;
        }
        if self.options.exclusivity_binaries {
            n += 2 * s * t * self.phevs;
        }
        if self.options.stage_mode == StageMode::DayAheadChp {
            n += s.saturating_sub(1) * t * self.chp;
        }
        n
    }
}

/// Row bookkeeping produced alongside the problem.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RowMap {
    pub kinds: Vec<(RowKind, usize, usize)>,
}

impl RowMap {
    /// Kind of `row`, from the `(kind, start, len)` ranges.
    pub fn kind(&self, row: usize) -> Option<RowKind> {
        self.kinds
            .iter()
            .find(|&&(_, start, len)| row >= start && row < start + len)
            .map(|k| k.0)
    }

    pub fn count(&self, kind: RowKind) -> usize {
        self.kinds.iter().filter(|k| k.0 == kind).map(|k| k.2).sum()
    }
}

struct Builder {
    problem: LpProblem,
    rows: RowMap,
}

impl Builder {
    fn row(&mut self, kind: RowKind, name: String, sense: RowSense, rhs: f64, coefs: &[(usize, f64)]) {
        let r = self.problem.add_row(sense, rhs, coefs);
        self.problem.set_row_name(r, name);
        match self.rows.kinds.last_mut() {
            Some(last) if last.0 == kind && last.1 + last.2 == r => last.2 += 1,
            _ => self.rows.kinds.push((kind, r, 1)),
        }
    }
}

pub fn check_inputs(config: &MicrogridConfig, scenarios: &ScenarioSet) -> Result<(), FormulationError> {
    validate_config(config)
        .into_result()
        .map_err(|e| FormulationError::InvalidConfig(e.to_string()))?;
    scenarios
        .validate()
        .map_err(|e| FormulationError::ScenarioMismatch(e.to_string()))?;
    for (s, sc) in scenarios.scenarios.iter().enumerate() {
        let issues = check_scenario(config, sc);
        if let Some(i) = issues.first() {
            return Err(FormulationError::ScenarioMismatch(format!("scenario {s}: {}: {}", i.code, i.message)));
        }
    }
    Ok(())
}

/// Assembles the probability-weighted deterministic equivalent.
pub fn build(
    config: &MicrogridConfig,
    scenarios: &ScenarioSet,
    options: &FormulationOptions,
) -> Result<(LpProblem, VariableIndex, RowMap), FormulationError> {
    check_inputs(config, scenarios)?;
    options.check(config)?;
    let idx = VariableIndex::new(config, scenarios.len(), *options);
    let dt = config.period_hours;
    let t_len = config.horizon;
    let col = |k, u, t, s| idx.col(k, u, t, s).expect("kind present");

    let mut problem = LpProblem::new("microgrid");
    for j in 0..idx.n_cols() {
        let (kind, unit, t, s) = idx.key(j).expect("contiguous index");
        let sc = &scenarios.scenarios[s];
        let w = sc.probability * dt;
        let (cost, lo, hi) = match kind {
            VarKind::Chp => {
                let u = &config.chp_units[unit];
                (w * u.cost_per_kwh, u.p_min, u.p_max)
            }
            VarKind::Charge | VarKind::Discharge => {
                let v = &config.phevs[unit];
                let present = sc.parking[unit][t];
                let (rate, factor) = if kind == VarKind::Charge {
                    (v.charge_rate_max, v.eta_charge)
                } else {
                    (v.discharge_rate_max, 1.0 / v.eta_discharge)
                };
                let hi = match options.parking_mode {
                    ParkingMode::ScenarioData if !present => 0.0,
                    _ => rate,
                };
                (w * v.degradation_cost_per_kwh * factor, 0.0, hi)
            }
            VarKind::Storage => {
                let v = &config.phevs[unit];
                (0.0, v.e_min, v.e_max)
            }
            VarKind::Serve => {
                let d = &config.deferrables[unit];
                if d.in_window(t) {
                    (0.0, d.rate_min, d.rate_max)
                } else {
                    (0.0, 0.0, 0.0)
                }
            }
            VarKind::Buy => (w * config.tariff.price_buy[t], 0.0, config.tariff.exchange_cap[t]),
            VarKind::Sell => (-w * config.tariff.price_sell[t], 0.0, config.tariff.exchange_cap[t]),
            VarKind::Curtail => (
                w * options.curtailment_penalty.expect("curtail column implies penalty"),
                0.0,
                sc.solar[t],
            ),
            VarKind::Park => (0.0, 0.0, if sc.parking[unit][t] { 1.0 } else { 0.0 }),
            VarKind::Mode => (0.0, 0.0, 1.0),
        };
        let c = problem.add_col(cost, lo, hi);
        if matches!(kind, VarKind::Park | VarKind::Mode) {
            problem.binary_cols.insert(c);
        }
        problem.set_col_name(c, idx.col_label(c));
    }

    let mut b = Builder {
        problem,
        rows: RowMap::default(),
    };

    for s in 0..idx.scenarios {
        for t in 0..t_len {
            for (m, v) in config.phevs.iter().enumerate() {
                let e = col(VarKind::Storage, m, t, s);
                let mut coefs = vec![
                    (e, 1.0),
                    (col(VarKind::Charge, m, t, s), -dt * v.eta_charge),
                    (col(VarKind::Discharge, m, t, s), dt / v.eta_discharge),
                ];
                let rhs = if t == 0 {
                    v.e_initial
                } else {
                    coefs.push((col(VarKind::Storage, m, t - 1, s), -1.0));
                    0.0
                };
                b.row(RowKind::StorageDynamics, format!("dyn{m}_{t}_{s}"), RowSense::Eq, rhs, &coefs);
            }
        }
    }
    for s in 0..idx.scenarios {
        for (m, v) in config.phevs.iter().enumerate() {
            b.row(
                RowKind::Terminal,
                format!("term{m}_{s}"),
                RowSense::Eq,
                v.e_initial,
                &[(col(VarKind::Storage, m, t_len - 1, s), 1.0)],
            );
        }
    }
    for (s, sc) in scenarios.scenarios.iter().enumerate() {
        for (j, d) in config.deferrables.iter().enumerate() {
            let coefs: Vec<(usize, f64)> = (0..t_len)
                .filter(|&t| d.in_window(t))
                .map(|t| (col(VarKind::Serve, j, t, s), dt))
                .collect();
            b.row(RowKind::DeferrableEnergy, format!("def{j}_{s}"), RowSense::Eq, sc.deferrable_energy[j], &coefs);
        }
    }
    for (s, sc) in scenarios.scenarios.iter().enumerate() {
        for t in 0..t_len {
            let mut coefs = Vec::new();
            for i in 0..idx.chp {
                coefs.push((col(VarKind::Chp, i, t, s), 1.0));
            }
            for m in 0..idx.phevs {
                coefs.push((col(VarKind::Charge, m, t, s), -1.0));
                coefs.push((col(VarKind::Discharge, m, t, s), 1.0));
            }
            for j in 0..idx.deferrables {
                coefs.push((col(VarKind::Serve, j, t, s), -1.0));
            }
            coefs.push((col(VarKind::Buy, 0, t, s), 1.0));
            coefs.push((col(VarKind::Sell, 0, t, s), -1.0));
            if let Some(c) = idx.col(VarKind::Curtail, 0, t, s) {
                coefs.push((c, -1.0));
            }
            b.row(
                RowKind::PowerBalance,
                format!("bal{t}_{s}"),
                RowSense::Eq,
                config.base_power[t] - sc.solar[t],
                &coefs,
            );
        }
    }
    for s in 0..idx.scenarios {
        for t in 0..t_len {
            let coefs: Vec<(usize, f64)> = config
                .chp_units
                .iter()
                .enumerate()
                .map(|(i, u)| (col(VarKind::Chp, i, t, s), u.alpha))
                .collect();
            b.row(RowKind::HeatBalance, format!("heat{t}_{s}"), RowSense::Ge, config.base_heat[t], &coefs);
        }
    }
    if options.parking_mode == ParkingMode::DecisionBinary {
        for (kind, var, name) in [
            (RowKind::ParkCharge, VarKind::Charge, "pkc"),
            (RowKind::ParkDischarge, VarKind::Discharge, "pkd"),
        ] {
            for s in 0..idx.scenarios {
                for t in 0..t_len {
                    for (m, v) in config.phevs.iter().enumerate() {
                        let rate = if var == VarKind::Charge {
                            v.charge_rate_max
                        } else {
                            v.discharge_rate_max
                        };
                        b.row(
                            kind,
                            format!("{name}{m}_{t}_{s}"),
                            RowSense::Le,
                            0.0,
                            &[(col(var, m, t, s), 1.0), (col(VarKind::Park, m, t, s), -rate)],
                        );
                    }
                }
            }
        }
    }
    if options.exclusivity_binaries {
        for s in 0..idx.scenarios {
            for t in 0..t_len {
                for (m, v) in config.phevs.iter().enumerate() {
                    b.row(
                        RowKind::ModeCharge,
                        format!("muc{m}_{t}_{s}"),
                        RowSense::Le,
                        0.0,
                        &[(col(VarKind::Charge, m, t, s), 1.0), (col(VarKind::Mode, m, t, s), -v.charge_rate_max)],
                    );
                }
            }
        }
        for s in 0..idx.scenarios {
            for t in 0..t_len {
                for (m, v) in config.phevs.iter().enumerate() {
                    b.row(
                        RowKind::ModeDischarge,
                        format!("mud{m}_{t}_{s}"),
                        RowSense::Le,
                        v.discharge_rate_max,
                        &[
                            (col(VarKind::Discharge, m, t, s), 1.0),
                            (col(VarKind::Mode, m, t, s), v.discharge_rate_max),
                        ],
                    );
                }
            }
        }
    }
    if options.stage_mode == StageMode::DayAheadChp {
        // chained equalities p^s = p^{s-1} imply equality across all pairs
        for s in 1..idx.scenarios {
            for t in 0..t_len {
                for i in 0..idx.chp {
                    b.row(
                        RowKind::Nonanticipativity,
                        format!("na{i}_{t}_{s}"),
                        RowSense::Eq,
                        0.0,
                        &[(col(VarKind::Chp, i, t, s), 1.0), (col(VarKind::Chp, i, t, s - 1), -1.0)],
                    );
                }
            }
        }
    }

    let Builder { problem, rows } = b;
    audit(&problem, &idx, &rows)?;
    Ok((problem, idx, rows))
}

/// Checks the assembled problem against the closed-form counts, per kind.
pub fn audit(problem: &LpProblem, idx: &VariableIndex, rows: &RowMap) -> Result<(), FormulationError> {
    let fail = |m: String| Err(FormulationError::Audit(m));
    if problem.n_cols != idx.expected_cols() || problem.n_cols != idx.n_cols() {
        return fail(format!("{} columns, formula gives {}", problem.n_cols, idx.expected_cols()));
    }
    if problem.n_rows != idx.expected_rows() {
        return fail(format!("{} rows, formula gives {}", problem.n_rows, idx.expected_rows()));
    }
    let (s, t) = (idx.scenarios, idx.periods);
    let o = &idx.options;
    let decision = o.parking_mode == ParkingMode::DecisionBinary;
    let expect = |kind: RowKind| match kind {
        RowKind::StorageDynamics => s * t * idx.phevs,
        RowKind::Terminal => s * idx.phevs,
        RowKind::DeferrableEnergy => s * idx.deferrables,
        RowKind::PowerBalance | RowKind::HeatBalance => s * t,
        RowKind::ParkCharge | RowKind::ParkDischarge if decision => s * t * idx.phevs,
        RowKind::ModeCharge | RowKind::ModeDischarge if o.exclusivity_binaries => s * t * idx.phevs,
        RowKind::Nonanticipativity if o.stage_mode == StageMode::DayAheadChp => s.saturating_sub(1) * t * idx.chp,
        _ => 0,
    };
    for kind in RowKind::ALL {
        if rows.count(kind) != expect(kind) {
            return fail(format!("{kind:?}: {} rows, expected {}", rows.count(kind), expect(kind)));
        }
    }
    let binaries = idx.units(VarKind::Park).unwrap_or(0) + idx.units(VarKind::Mode).unwrap_or(0);
    if problem.binary_cols.len() != s * t * binaries {
        return fail(format!("{} binary columns, expected {}", problem.binary_cols.len(), s * t * binaries));
    }
    Ok(())
}

/// Reads a per-scenario schedule out of a solution vector.
pub fn extract_schedule(
    solution: &LpSolution,
    index: &VariableIndex,
    config: &MicrogridConfig,
    scenarios: &ScenarioSet,
) -> Result<Schedule, FormulationError> {
    let has_point = match solution.status {
        LpStatus::Optimal => true,
        LpStatus::Limit => solution.mip.as_ref().is_some_and(|m| !m.incumbent_trace.is_empty()),
        _ => false,
    };
    if !has_point {
        return Err(FormulationError::Status(solution.status));
    }
    extract_point(&solution.primal, index, config, scenarios)
}

/// As [`extract_schedule`], for a raw point.
pub fn extract_point(
    x: &[f64],
    index: &VariableIndex,
    config: &MicrogridConfig,
    scenarios: &ScenarioSet,
) -> Result<Schedule, FormulationError> {
    if x.len() != index.n_cols() {
        return Err(FormulationError::SolutionSize {
            got: x.len(),
            expected: index.n_cols(),
        });
    }
    if scenarios.len() != index.scenarios {
        return Err(FormulationError::ScenarioMismatch(format!(
            "index built for {} scenarios, got {}",
            index.scenarios,
            scenarios.len()
        )));
    }
    let t_len = index.periods;
    let get = |k, u, t, s| index.col(k, u, t, s).map_or(0.0, |c| x[c]);
    let grid = |k, n: usize, s| -> Vec<Vec<f64>> {
        (0..n).map(|u| (0..t_len).map(|t| get(k, u, t, s)).collect()).collect()
    };
    let mut out = Schedule::default();
    for s in 0..index.scenarios {
        let dispatch = Dispatch {
            chp_power: grid(VarKind::Chp, index.chp, s),
            charge: grid(VarKind::Charge, index.phevs, s),
            discharge: grid(VarKind::Discharge, index.phevs, s),
            serve: grid(VarKind::Serve, index.deferrables, s),
            grid_buy: (0..t_len).map(|t| get(VarKind::Buy, 0, t, s)).collect(),
            grid_sell: (0..t_len).map(|t| get(VarKind::Sell, 0, t, s)).collect(),
            curtail: (0..t_len).map(|t| get(VarKind::Curtail, 0, t, s)).collect(),
        };
        let storage = storage_trajectory(config, &dispatch);
        for (m, row) in storage.iter().enumerate() {
            for (t, &e) in row.iter().enumerate() {
                let c = index.col(VarKind::Storage, m, t, s).expect("storage column");
                let deviation = (e - x[c]).abs();
                if deviation > 1e-6 {
                    return Err(FormulationError::StorageMismatch {
                        column: index.col_label(c),
                        deviation,
                    });
                }
            }
        }
        out.scenarios.push(
            ScenarioSchedule::new(config, dispatch)
                .map_err(|e| FormulationError::ScenarioMismatch(e.to_string()))?,
        );
    }
    Ok(out)
}
