//! Microgrid domain types and solver-independent checks.
//!
//! Units throughout: powers in kW, energies in kWh, prices in currency per
//! kWh, heat in kW-thermal. Decision variables are power rates held for one
//! period of `period_hours`; energy is rate times `period_hours`.
//!
//! Grid exchange convention: `grid_buy` is imported power, costed at
//! `price_buy`; `grid_sell` is exported power, credited at `price_sell`. The
//! power balance reads
//! `chp + discharge - charge + solar + buy = base + serve + sell + curtail`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::ScenarioSet;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChpUnit {
    pub p_min: f64,
    pub p_max: f64,
    /// Useful heat produced per unit of electric power.
    pub alpha: f64,
    pub cost_per_kwh: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phev {
    pub e_min: f64,
    pub e_max: f64,
    pub e_initial: f64,
    pub charge_rate_max: f64,
    pub discharge_rate_max: f64,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    pub degradation_cost_per_kwh: f64,
}

impl Phev {
    /// The vehicle used throughout the case study: 18 kWh pack, 20% floor,
    /// 4 kW in both directions, 0.9 efficiencies, half full at both ends.
    pub fn case_study() -> Self {
        Phev {
            e_min: 4.0,
            e_max: 18.0,
            e_initial: 9.0,
            charge_rate_max: 4.0,
            discharge_rate_max: 4.0,
            eta_charge: 0.9,
            eta_discharge: 0.9,
            degradation_cost_per_kwh: 0.0035,
        }
    }
}

/// A task that needs `energy_nominal` delivered within periods
/// `t_arrive..=t_depart` (1-based, inclusive).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeferrableLoad {
    pub t_arrive: usize,
    pub t_depart: usize,
    pub rate_min: f64,
    pub rate_max: f64,
    pub energy_nominal: f64,
}

impl DeferrableLoad {
    /// Whether 0-based period `t` lies inside the service window.
    pub fn in_window(&self, t: usize) -> bool {
        t + 1 >= self.t_arrive && t < self.t_depart
    }

    pub fn window_len(&self) -> usize {
        (self.t_depart + 1).saturating_sub(self.t_arrive)
    }

    /// Range of energies the window can deliver.
    pub fn energy_range(&self, period_hours: f64) -> (f64, f64) {
        let len = self.window_len() as f64 * period_hours;
        (self.rate_min * len, self.rate_max * len)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridTariff {
    pub price_buy: Vec<f64>,
    pub price_sell: Vec<f64>,
    pub exchange_cap: Vec<f64>,
}

fn default_period_hours() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicrogridConfig {
    pub horizon: usize,
    #[serde(default = "default_period_hours")]
    pub period_hours: f64,
    pub chp_units: Vec<ChpUnit>,
    pub phevs: Vec<Phev>,
    pub deferrables: Vec<DeferrableLoad>,
    pub tariff: GridTariff,
    pub base_power: Vec<f64>,
    pub base_heat: Vec<f64>,
    pub solar_capacity: f64,
}

/// One joint realization of solar output, vehicle availability and
/// deferrable energy needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub probability: f64,
    pub solar: Vec<f64>,
    /// `parking[m][t]`: vehicle `m` is plugged in during period `t`.
    #[serde(with = "bit_matrix")]
    pub parking: Vec<Vec<bool>>,
    pub deferrable_energy: Vec<f64>,
}

mod bit_matrix {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &[Vec<bool>], s: S) -> Result<S::Ok, S::Error> {
        let bits: Vec<Vec<u8>> = m.iter().map(|r| r.iter().map(|&b| b as u8).collect()).collect();
        bits.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<bool>>, D::Error> {
        let bits: Vec<Vec<u8>> = Vec::deserialize(d)?;
        Ok(bits.into_iter().map(|r| r.into_iter().map(|b| b != 0).collect()).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    HorizonZero,
    PeriodHours,
    SeriesLength,
    NegativeValue,
    NonFinite,
    ChpBounds,
    ChpAlpha,
    NegativeCost,
    PhevEnergyOrder,
    PhevRate,
    PhevEfficiency,
    WindowReversed,
    WindowOutOfHorizon,
    WindowInfeasible,
    RateBounds,
    SellAboveBuy,
    ScenarioDimension,
    SolarRange,
    Probability,
    DeferrableEnergy,
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub code: IssueCode,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    /// Conditions that leave the model well-posed but weaken guarantees.
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has(&self, code: IssueCode) -> bool {
        self.errors.iter().chain(&self.warnings).any(|i| i.code == code)
    }

    fn error(&mut self, code: IssueCode, message: impl Into<String>) {
        self.errors.push(Issue {
            code,
            message: message.into(),
        });
    }

    fn warn(&mut self, code: IssueCode, message: impl Into<String>) {
        self.warnings.push(Issue {
            code,
            message: message.into(),
        });
    }

    pub fn into_result(self) -> Result<Vec<Issue>, ModelError> {
        if self.is_valid() {
            Ok(self.warnings)
        } else {
            let msg = self
                .errors
                .iter()
                .map(|i| format!("{}: {}", i.code, i.message))
                .collect::<Vec<_>>()
                .join("; ");
            Err(ModelError::Invalid(msg))
        }
    }
}

pub fn validate_config(config: &MicrogridConfig) -> ValidationReport {
    use IssueCode::*;
    let mut rep = ValidationReport::default();
    let t_len = config.horizon;
    if t_len == 0 {
        rep.error(HorizonZero, "horizon must contain at least one period");
    }
    if !(config.period_hours > 0.0 && config.period_hours.is_finite()) {
        rep.error(PeriodHours, format!("period_hours {} must be positive", config.period_hours));
    }
    let series = [
        ("base_power", &config.base_power),
        ("base_heat", &config.base_heat),
        ("price_buy", &config.tariff.price_buy),
        ("price_sell", &config.tariff.price_sell),
        ("exchange_cap", &config.tariff.exchange_cap),
    ];
    for (name, s) in series {
        if s.len() != t_len {
            rep.error(SeriesLength, format!("{name} has {} entries, horizon is {t_len}", s.len()));
        }
        for (t, &v) in s.iter().enumerate() {
            if !v.is_finite() {
                rep.error(NonFinite, format!("{name}[{t}] is not finite"));
            } else if v < 0.0 {
                rep.error(NegativeValue, format!("{name}[{t}] = {v} is negative"));
            }
        }
    }
    if !(config.solar_capacity >= 0.0 && config.solar_capacity.is_finite()) {
        rep.error(NegativeValue, "solar_capacity must be a nonnegative number");
    }
    let n = config.tariff.price_buy.len().min(config.tariff.price_sell.len());
    for t in 0..n {
        if config.tariff.price_sell[t] > config.tariff.price_buy[t] {
            rep.warn(
                SellAboveBuy,
                format!("period {t}: selling price exceeds buying price; buy/sell exclusivity is not guaranteed"),
            );
        }
    }

    for (i, u) in config.chp_units.iter().enumerate() {
        let vals = [u.p_min, u.p_max, u.alpha, u.cost_per_kwh];
        if vals.iter().any(|v| !v.is_finite()) {
            rep.error(NonFinite, format!("chp {i} has a non-finite parameter"));
            continue;
        }
        if u.p_min < 0.0 || u.p_min > u.p_max {
            rep.error(ChpBounds, format!("chp {i}: need 0 <= p_min <= p_max"));
        }
        if u.alpha <= 0.0 {
            rep.error(ChpAlpha, format!("chp {i}: alpha must be positive"));
        }
        if u.cost_per_kwh < 0.0 {
            rep.error(NegativeCost, format!("chp {i}: negative cost"));
        }
    }

    for (m, v) in config.phevs.iter().enumerate() {
        let vals = [
            v.e_min,
            v.e_max,
            v.e_initial,
            v.charge_rate_max,
            v.discharge_rate_max,
            v.eta_charge,
            v.eta_discharge,
            v.degradation_cost_per_kwh,
        ];
        if vals.iter().any(|x| !x.is_finite()) {
            rep.error(NonFinite, format!("phev {m} has a non-finite parameter"));
            continue;
        }
        if !(0.0 <= v.e_min && v.e_min <= v.e_initial && v.e_initial <= v.e_max) {
            rep.error(PhevEnergyOrder, format!("phev {m}: need 0 <= e_min <= e_initial <= e_max"));
        }
        if v.charge_rate_max < 0.0 || v.discharge_rate_max < 0.0 {
            rep.error(PhevRate, format!("phev {m}: negative rate limit"));
        }
        if !(v.eta_charge > 0.0 && v.eta_charge <= 1.0 && v.eta_discharge > 0.0 && v.eta_discharge <= 1.0) {
            rep.error(PhevEfficiency, format!("phev {m}: efficiencies must lie in (0, 1]"));
        }
        if v.degradation_cost_per_kwh < 0.0 {
            rep.error(NegativeCost, format!("phev {m}: negative degradation cost"));
        }
    }

    for (j, d) in config.deferrables.iter().enumerate() {
        if [d.rate_min, d.rate_max, d.energy_nominal].iter().any(|x| !x.is_finite()) {
            rep.error(NonFinite, format!("deferrable {j} has a non-finite parameter"));
            continue;
        }
        if d.rate_min < 0.0 || d.rate_min > d.rate_max {
            rep.error(RateBounds, format!("deferrable {j}: need 0 <= rate_min <= rate_max"));
        }
        if d.t_arrive > d.t_depart {
            rep.error(
                WindowReversed,
                format!("deferrable {j}: arrival {} after departure {}", d.t_arrive, d.t_depart),
            );
            continue;
        }
        if d.t_arrive < 1 || d.t_depart > t_len {
            rep.error(
                WindowOutOfHorizon,
                format!("deferrable {j}: window [{}, {}] outside 1..={t_len}", d.t_arrive, d.t_depart),
            );
        }
        let (lo, hi) = d.energy_range(config.period_hours);
        if d.energy_nominal < lo || d.energy_nominal > hi {
            rep.error(
                WindowInfeasible,
                format!(
                    "deferrable {j}: energy {} outside deliverable range [{lo}, {hi}]",
                    d.energy_nominal
                ),
            );
        }
    }
    rep
}

/// Checks a scenario's dimensions and ranges against a configuration.
pub fn check_scenario(config: &MicrogridConfig, s: &Scenario) -> Vec<Issue> {
    use IssueCode::*;
    let mut out = Vec::new();
    let mut push = |code, message: String| out.push(Issue { code, message });
    let t_len = config.horizon;
    if !(s.probability >= 0.0 && s.probability <= 1.0) {
        push(Probability, format!("probability {} outside [0, 1]", s.probability));
    }
    if s.solar.len() != t_len {
        push(ScenarioDimension, format!("solar has {} periods, expected {t_len}", s.solar.len()));
    }
    for (t, &w) in s.solar.iter().enumerate() {
        if !(w >= 0.0 && w <= config.solar_capacity + 1e-9) {
            push(SolarRange, format!("solar[{t}] = {w} outside [0, {}]", config.solar_capacity));
        }
    }
    if s.parking.len() != config.phevs.len() || s.parking.iter().any(|r| r.len() != t_len) {
        push(ScenarioDimension, "parking matrix does not match fleet x horizon".into());
    }
    if s.deferrable_energy.len() != config.deferrables.len() {
        push(
            ScenarioDimension,
            format!(
                "{} deferrable energies for {} loads",
                s.deferrable_energy.len(),
                config.deferrables.len()
            ),
        );
    } else {
        for (j, (d, &e)) in config.deferrables.iter().zip(&s.deferrable_energy).enumerate() {
            let (lo, hi) = d.energy_range(config.period_hours);
            if e < lo - 1e-9 || e > hi + 1e-9 {
                push(
                    DeferrableEnergy,
                    format!("deferrable {j}: energy {e} outside deliverable range [{lo}, {hi}]"),
                );
            }
        }
    }
    out
}

/// Decisions for one scenario. Outer index is the unit (CHP, vehicle or
/// load), inner index the period.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dispatch {
    pub chp_power: Vec<Vec<f64>>,
    pub charge: Vec<Vec<f64>>,
    pub discharge: Vec<Vec<f64>>,
    pub serve: Vec<Vec<f64>>,
    pub grid_buy: Vec<f64>,
    pub grid_sell: Vec<f64>,
    /// Surplus solar thrown away; zero unless curtailment is enabled.
    pub curtail: Vec<f64>,
}

impl Dispatch {
    pub fn zeros(config: &MicrogridConfig) -> Self {
        let t = config.horizon;
        Dispatch {
            chp_power: vec![vec![0.0; t]; config.chp_units.len()],
            charge: vec![vec![0.0; t]; config.phevs.len()],
            discharge: vec![vec![0.0; t]; config.phevs.len()],
            serve: vec![vec![0.0; t]; config.deferrables.len()],
            grid_buy: vec![0.0; t],
            grid_sell: vec![0.0; t],
            curtail: vec![0.0; t],
        }
    }

    fn check_dims(&self, config: &MicrogridConfig) -> Result<(), ModelError> {
        let t = config.horizon;
        let ok = |m: &[Vec<f64>], n: usize| m.len() == n && m.iter().all(|r| r.len() == t);
        if !ok(&self.chp_power, config.chp_units.len())
            || !ok(&self.charge, config.phevs.len())
            || !ok(&self.discharge, config.phevs.len())
            || !ok(&self.serve, config.deferrables.len())
            || self.grid_buy.len() != t
            || self.grid_sell.len() != t
            || self.curtail.len() != t
        {
            return Err(ModelError::Dimension("dispatch does not match configuration".into()));
        }
        Ok(())
    }
}

/// A dispatch plus the stored energy it implies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioSchedule {
    #[serde(flatten)]
    pub dispatch: Dispatch,
    storage: Vec<Vec<f64>>,
}

impl ScenarioSchedule {
    pub fn new(config: &MicrogridConfig, dispatch: Dispatch) -> Result<Self, ModelError> {
        dispatch.check_dims(config)?;
        let storage = storage_trajectory(config, &dispatch);
        Ok(ScenarioSchedule { dispatch, storage })
    }

    /// Stored energy at the end of each period, `[m][t]`.
    pub fn storage(&self) -> &[Vec<f64>] {
        &self.storage
    }
}

/// Forward simulation of the battery recursion
/// `E_t = E_{t-1} + dt * (eta_c * charge - discharge / eta_d)`.
pub fn storage_trajectory(config: &MicrogridConfig, d: &Dispatch) -> Vec<Vec<f64>> {
    let dt = config.period_hours;
    config
        .phevs
        .iter()
        .enumerate()
        .map(|(m, v)| {
            let mut e = v.e_initial;
            (0..config.horizon)
                .map(|t| {
                    e += dt * (v.eta_charge * d.charge[m][t] - d.discharge[m][t] / v.eta_discharge);
                    e
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Schedule {
    pub scenarios: Vec<ScenarioSchedule>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub chp: f64,
    pub degradation: f64,
    pub grid_purchase: f64,
    pub grid_revenue: f64,
    pub total: f64,
}

/// Operating cost of one scenario's dispatch, unweighted.
pub fn scenario_cost(config: &MicrogridConfig, d: &Dispatch) -> Result<CostBreakdown, ModelError> {
    d.check_dims(config)?;
    let dt = config.period_hours;
    let mut c = CostBreakdown::default();
    for t in 0..config.horizon {
        for (i, u) in config.chp_units.iter().enumerate() {
            c.chp += u.cost_per_kwh * d.chp_power[i][t] * dt;
        }
        for (m, v) in config.phevs.iter().enumerate() {
            c.degradation += v.degradation_cost_per_kwh
                * (d.charge[m][t] * v.eta_charge + d.discharge[m][t] / v.eta_discharge)
                * dt;
        }
        c.grid_purchase += config.tariff.price_buy[t] * d.grid_buy[t] * dt;
        c.grid_revenue += config.tariff.price_sell[t] * d.grid_sell[t] * dt;
    }
    c.total = c.chp + c.degradation + c.grid_purchase - c.grid_revenue;
    Ok(c)
}

/// Probability-weighted operating cost of a schedule.
pub fn evaluate_cost(
    config: &MicrogridConfig,
    scenarios: &ScenarioSet,
    schedule: &Schedule,
) -> Result<f64, ModelError> {
    if schedule.scenarios.len() != scenarios.len() {
        return Err(ModelError::Dimension(format!(
            "{} schedules for {} scenarios",
            schedule.scenarios.len(),
            scenarios.len()
        )));
    }
    let mut total = 0.0;
    for (s, sched) in scenarios.scenarios.iter().zip(&schedule.scenarios) {
        total += s.probability * scenario_cost(config, &sched.dispatch)?.total;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodBalance {
    pub period: usize,
    /// Supply minus demand, kW.
    pub power_residual: f64,
    /// Heat produced minus heat demanded, kW-thermal.
    pub heat_surplus: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub periods: Vec<PeriodBalance>,
    pub max_abs_power_residual: f64,
    pub min_heat_surplus: f64,
}

impl BalanceReport {
    pub fn flagged(&self) -> impl Iterator<Item = &PeriodBalance> {
        self.periods.iter().filter(|p| p.flagged)
    }

    pub fn is_balanced(&self) -> bool {
        self.flagged().next().is_none()
    }
}

pub fn check_balance(
    config: &MicrogridConfig,
    scenario: &Scenario,
    d: &Dispatch,
    tol: f64,
) -> Result<BalanceReport, ModelError> {
    d.check_dims(config)?;
    if scenario.solar.len() != config.horizon {
        return Err(ModelError::Dimension("scenario horizon differs from config".into()));
    }
    let mut rep = BalanceReport {
        min_heat_surplus: f64::INFINITY,
        ..Default::default()
    };
    for t in 0..config.horizon {
        let chp: f64 = d.chp_power.iter().map(|p| p[t]).sum();
        let storage_net: f64 = (0..config.phevs.len())
            .map(|m| d.discharge[m][t] - d.charge[m][t])
            .sum();
        let served: f64 = d.serve.iter().map(|l| l[t]).sum();
        let supply = chp + storage_net + scenario.solar[t] + d.grid_buy[t];
        let demand = d.grid_sell[t] + config.base_power[t] + served + d.curtail[t];
        let power_residual = supply - demand;
        let heat: f64 = config
            .chp_units
            .iter()
            .zip(&d.chp_power)
            .map(|(u, p)| u.alpha * p[t])
            .sum();
        let heat_surplus = heat - config.base_heat[t];
        let flagged = power_residual.abs() > tol || heat_surplus < -tol;
        rep.max_abs_power_residual = rep.max_abs_power_residual.max(power_residual.abs());
        rep.min_heat_surplus = rep.min_heat_surplus.min(heat_surplus);
        rep.periods.push(PeriodBalance {
            period: t,
            power_residual,
            heat_surplus,
            flagged,
        });
    }
    Ok(rep)
}

/// Largest violation of each constraint family for one scenario.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub chp_limits: f64,
    pub storage_bounds: f64,
    pub rate_limits: f64,
    pub terminal: f64,
    pub deferrable_energy: f64,
    pub deferrable_rate: f64,
    pub deferrable_window: f64,
    pub grid_limits: f64,
    pub power_balance: f64,
    pub heat_balance: f64,
}

impl ConstraintReport {
    pub fn max_violation(&self) -> f64 {
        [
            self.chp_limits,
            self.storage_bounds,
            self.rate_limits,
            self.terminal,
            self.deferrable_energy,
            self.deferrable_rate,
            self.deferrable_window,
            self.grid_limits,
            self.power_balance,
            self.heat_balance,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Evaluates every operating constraint of the microgrid for one scenario's
/// schedule, independently of any problem matrix.
pub fn check_schedule(
    config: &MicrogridConfig,
    scenario: &Scenario,
    sched: &ScenarioSchedule,
) -> Result<ConstraintReport, ModelError> {
    let d = &sched.dispatch;
    let bal = check_balance(config, scenario, d, f64::INFINITY)?;
    let below = |v: f64, lo: f64| (lo - v).max(0.0);
    let above = |v: f64, hi: f64| (v - hi).max(0.0);
    let mut r = ConstraintReport {
        power_balance: bal.max_abs_power_residual,
        heat_balance: (-bal.min_heat_surplus).max(0.0),
        ..Default::default()
    };
    let dt = config.period_hours;
    for t in 0..config.horizon {
        for (i, u) in config.chp_units.iter().enumerate() {
            let p = d.chp_power[i][t];
            r.chp_limits = r.chp_limits.max(below(p, u.p_min)).max(above(p, u.p_max));
        }
        for (m, v) in config.phevs.iter().enumerate() {
            let parked = if scenario.parking[m][t] { 1.0 } else { 0.0 };
            let e = sched.storage[m][t];
            r.storage_bounds = r.storage_bounds.max(below(e, v.e_min)).max(above(e, v.e_max));
            r.rate_limits = r
                .rate_limits
                .max(below(d.charge[m][t], 0.0))
                .max(below(d.discharge[m][t], 0.0))
                .max(above(d.charge[m][t], v.charge_rate_max * parked))
                .max(above(d.discharge[m][t], v.discharge_rate_max * parked));
        }
        let cap = config.tariff.exchange_cap[t];
        for g in [d.grid_buy[t], d.grid_sell[t]] {
            r.grid_limits = r.grid_limits.max(below(g, 0.0)).max(above(g, cap));
        }
        r.power_balance = r.power_balance.max(below(d.curtail[t], 0.0));
    }
    for (m, v) in config.phevs.iter().enumerate() {
        if let Some(&last) = sched.storage[m].last() {
            r.terminal = r.terminal.max((last - v.e_initial).abs());
        }
    }
    for (j, load) in config.deferrables.iter().enumerate() {
        let mut energy = 0.0;
        for t in 0..config.horizon {
            let l = d.serve[j][t];
            if load.in_window(t) {
                energy += l * dt;
                r.deferrable_rate = r
                    .deferrable_rate
                    .max(below(l, load.rate_min))
                    .max(above(l, load.rate_max));
            } else {
                r.deferrable_window = r.deferrable_window.max(l.abs());
            }
        }
        r.deferrable_energy = r
            .deferrable_energy
            .max((energy - scenario.deferrable_energy[j]).abs());
    }
    Ok(r)
}
