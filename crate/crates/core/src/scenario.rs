//! Monte Carlo scenario generation and fast-forward scenario reduction.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MicrogridConfig, Scenario};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario count must be positive")]
    ZeroCount,
    #[error("keep = {keep} outside 1..={available}")]
    KeepOutOfRange { keep: usize, available: usize },
    #[error("subset must be nonempty")]
    EmptySubset,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid generation spec: {0}")]
    InvalidSpec(String),
    #[error("invalid scenario set: {0}")]
    InvalidSet(String),
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Random perturbation applied to the mean solar profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum SolarNoise {
    /// `mean * exp(sigma z - sigma^2 / 2)`, which keeps the mean unchanged.
    MultiplicativeLognormal { sigma: f64 },
    /// Normal around the mean with standard deviation `sigma * mean`,
    /// truncated to `[0, solar_capacity]`.
    TruncatedNormal { sigma: f64 },
    /// Uniform resampling of the given trajectories.
    Empirical { samples: Vec<Vec<f64>> },
}

/// Parking probabilities: one value for everything, a profile over
/// periods, one value per vehicle, or a vehicle-by-period matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParkingProb {
    Uniform(f64),
    PerPeriod(Vec<f64>),
    PerVehicle(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

impl ParkingProb {
    pub fn at(&self, m: usize, t: usize) -> f64 {
        match self {
            ParkingProb::Uniform(p) => *p,
            ParkingProb::PerPeriod(v) => v[t],
            ParkingProb::PerVehicle(v) => v[m],
            ParkingProb::Matrix(mat) => mat[m][t],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationSpec {
    pub solar_profile_mean: Vec<f64>,
    pub solar_noise: SolarNoise,
    pub parking_prob: ParkingProb,
    pub deferrable_energy_mean: Vec<f64>,
    /// Half-width of the uniform band around each mean energy.
    pub deferrable_energy_spread: Vec<f64>,
    pub rng_seed: u64,
}

impl GenerationSpec {
    pub fn check(&self, config: &MicrogridConfig) -> Result<(), ScenarioError> {
        let t_len = config.horizon;
        let bad = |m: String| Err(ScenarioError::InvalidSpec(m));
        if self.solar_profile_mean.len() != t_len {
            return bad(format!(
                "solar profile has {} periods, horizon is {t_len}",
                self.solar_profile_mean.len()
            ));
        }
        if self.solar_profile_mean.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return bad("solar profile must be nonnegative".into());
        }
        match &self.solar_noise {
            SolarNoise::MultiplicativeLognormal { sigma } | SolarNoise::TruncatedNormal { sigma } => {
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return bad(format!("sigma {sigma} must be nonnegative"));
                }
            }
            SolarNoise::Empirical { samples } => {
                if samples.is_empty() {
                    return bad("empirical solar model needs at least one sample".into());
                }
                if samples.iter().any(|s| s.len() != t_len) {
                    return bad("every empirical sample must cover the horizon".into());
                }
            }
        }
        let n_p = config.phevs.len();
        let shape_ok = match &self.parking_prob {
            ParkingProb::Uniform(_) => true,
            ParkingProb::PerPeriod(v) => v.len() == t_len,
            ParkingProb::PerVehicle(v) => v.len() == n_p,
            ParkingProb::Matrix(m) => m.len() == n_p && m.iter().all(|r| r.len() == t_len),
        };
        if !shape_ok {
            return bad("parking probabilities do not match fleet x horizon".into());
        }
        for m in 0..n_p {
            for t in 0..t_len {
                let p = self.parking_prob.at(m, t);
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("parking probability {p} outside [0, 1]"));
                }
            }
        }
        let n_j = config.deferrables.len();
        if self.deferrable_energy_mean.len() != n_j || self.deferrable_energy_spread.len() != n_j {
            return bad(format!("need {n_j} deferrable energy means and spreads"));
        }
        if self.deferrable_energy_spread.iter().any(|&s| !(s >= 0.0)) {
            return bad("deferrable spreads must be nonnegative".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    pub fn new(scenarios: Vec<Scenario>) -> Self {
        ScenarioSet { scenarios }
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.scenarios.iter().map(|s| s.probability).sum()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.is_empty() {
            return Err(ScenarioError::InvalidSet("no scenarios".into()));
        }
        if self.scenarios.iter().any(|s| !(s.probability >= 0.0)) {
            return Err(ScenarioError::InvalidSet("negative probability".into()));
        }
        let total = self.total_probability();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ScenarioError::InvalidSet(format!("probabilities sum to {total}")));
        }
        let first = &self.scenarios[0];
        let same_shape = self.scenarios.iter().all(|s| {
            s.solar.len() == first.solar.len()
                && s.parking.len() == first.parking.len()
                && s.parking.iter().all(|r| r.len() == first.solar.len())
                && s.deferrable_energy.len() == first.deferrable_energy.len()
        });
        if !same_shape {
            return Err(ScenarioError::Dimension("scenarios differ in shape".into()));
        }
        Ok(())
    }

    /// The probability-weighted mean scenario. Parking is rounded by
    /// weighted majority, with an even split counting as parked.
    pub fn expected_scenario(&self) -> Scenario {
        let first = &self.scenarios[0];
        let t_len = first.solar.len();
        let mut solar = vec![0.0; t_len];
        let mut parked = vec![vec![0.0; t_len]; first.parking.len()];
        let mut energy = vec![0.0; first.deferrable_energy.len()];
        for s in &self.scenarios {
            for (acc, w) in solar.iter_mut().zip(&s.solar) {
                *acc += s.probability * w;
            }
            for (acc, row) in parked.iter_mut().zip(&s.parking) {
                for (a, &b) in acc.iter_mut().zip(row) {
                    if b {
                        *a += s.probability;
                    }
                }
            }
            for (acc, e) in energy.iter_mut().zip(&s.deferrable_energy) {
                *acc += s.probability * e;
            }
        }
        let total = self.total_probability();
        Scenario {
            probability: 1.0,
            solar: solar.into_iter().map(|w| w / total).collect(),
            parking: parked
                .into_iter()
                .map(|r| r.into_iter().map(|p| p / total >= 0.5 - 1e-12).collect())
                .collect(),
            deferrable_energy: energy.into_iter().map(|e| e / total).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String, ScenarioError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let set: ScenarioSet = serde_json::from_str(text)?;
        set.validate()?;
        Ok(set)
    }

    /// Writes `solar.csv`, `parking.csv`, `deferrable.csv` and
    /// `probabilities.csv` into `dir`.
    pub fn write_csv_bundle(&self, dir: &Path) -> Result<(), ScenarioError> {
        fs::create_dir_all(dir)?;
        let t_len = self.scenarios.first().map_or(0, |s| s.solar.len());
        let n_j = self.scenarios.first().map_or(0, |s| s.deferrable_energy.len());
        let periods: Vec<String> = (1..=t_len).map(|t| format!("t{t}")).collect();

        let mut w = csv::Writer::from_path(dir.join("solar.csv"))?;
        w.write_record(std::iter::once("scenario".to_string()).chain(periods.iter().cloned()))?;
        for (s, sc) in self.scenarios.iter().enumerate() {
            w.write_record(std::iter::once(s.to_string()).chain(sc.solar.iter().map(f64::to_string)))?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("parking.csv"))?;
        w.write_record(["scenario".to_string(), "phev".to_string()].into_iter().chain(periods.iter().cloned()))?;
        for (s, sc) in self.scenarios.iter().enumerate() {
            for (m, row) in sc.parking.iter().enumerate() {
                w.write_record(
                    [s.to_string(), m.to_string()]
                        .into_iter()
                        .chain(row.iter().map(|&b| u8::from(b).to_string())),
                )?;
            }
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("deferrable.csv"))?;
        w.write_record(std::iter::once("scenario".to_string()).chain((0..n_j).map(|j| format!("load{j}"))))?;
        for (s, sc) in self.scenarios.iter().enumerate() {
            w.write_record(
                std::iter::once(s.to_string()).chain(sc.deferrable_energy.iter().map(f64::to_string)),
            )?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("probabilities.csv"))?;
        w.write_record(["scenario", "probability"])?;
        for (s, sc) in self.scenarios.iter().enumerate() {
            w.write_record([s.to_string(), sc.probability.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv_bundle(dir: &Path) -> Result<Self, ScenarioError> {
        let probs = read_table(&dir.join("probabilities.csv"))?;
        let n = probs.len();
        let mut scenarios: Vec<Scenario> = Vec::with_capacity(n);
        for (s, row) in probs.iter().enumerate() {
            expect_index(&dir.join("probabilities.csv"), row, s)?;
            scenarios.push(Scenario {
                probability: row[1],
                solar: Vec::new(),
                parking: Vec::new(),
                deferrable_energy: Vec::new(),
            });
        }
        let solar_path = dir.join("solar.csv");
        let solar = read_table(&solar_path)?;
        if solar.len() != n {
            return Err(format_err(&solar_path, format!("{} rows for {n} scenarios", solar.len())));
        }
        for (s, row) in solar.iter().enumerate() {
            expect_index(&solar_path, row, s)?;
            scenarios[s].solar = row[1..].to_vec();
        }
        let def_path = dir.join("deferrable.csv");
        let def = read_table(&def_path)?;
        if def.len() != n {
            return Err(format_err(&def_path, format!("{} rows for {n} scenarios", def.len())));
        }
        for (s, row) in def.iter().enumerate() {
            expect_index(&def_path, row, s)?;
            scenarios[s].deferrable_energy = row[1..].to_vec();
        }
        let park_path = dir.join("parking.csv");
        for row in read_table(&park_path)? {
            let s = row[0] as usize;
            let m = row[1] as usize;
            let sc = scenarios
                .get_mut(s)
                .ok_or_else(|| format_err(&park_path, format!("unknown scenario {s}")))?;
            if m != sc.parking.len() {
                return Err(format_err(&park_path, format!("scenario {s}: vehicle {m} out of order")));
            }
            sc.parking.push(row[2..].iter().map(|&b| b != 0.0).collect());
        }
        let set = ScenarioSet { scenarios };
        set.validate()?;
        Ok(set)
    }
}

fn format_err(path: &Path, message: String) -> ScenarioError {
    ScenarioError::Format {
        path: path.display().to_string(),
        message,
    }
}

fn expect_index(path: &Path, row: &[f64], s: usize) -> Result<(), ScenarioError> {
    if row.first() != Some(&(s as f64)) {
        return Err(format_err(path, format!("expected scenario {s} in row {}", s + 1)));
    }
    Ok(())
}

fn read_table(path: &Path) -> Result<Vec<Vec<f64>>, ScenarioError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format_err(path, format!("row {}: {e}", i + 2)))?;
        out.push(row);
    }
    Ok(out)
}

const SOLAR_STREAM: u64 = 0;
const PARKING_STREAM: u64 = 1;
const DEFERRABLE_STREAM: u64 = 2;

fn substream(seed: u64, scenario: usize, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(scenario as u64 * 4 + block);
    rng
}

fn draw_solar(spec: &GenerationSpec, cap: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let clamp = |w: f64| w.clamp(0.0, cap);
    match &spec.solar_noise {
        SolarNoise::MultiplicativeLognormal { sigma } => {
            let noise = LogNormal::new(-sigma * sigma / 2.0, *sigma).expect("checked sigma");
            spec.solar_profile_mean
                .iter()
                .map(|&mu| clamp(mu * noise.sample(rng)))
                .collect()
        }
        SolarNoise::TruncatedNormal { sigma } => spec
            .solar_profile_mean
            .iter()
            .map(|&mu| {
                let sd = sigma * mu;
                if sd == 0.0 {
                    return clamp(mu);
                }
                let normal = Normal::new(mu, sd).expect("checked sigma");
                let mut last = mu;
                for _ in 0..64 {
                    last = normal.sample(rng);
                    if (0.0..=cap).contains(&last) {
                        return last;
                    }
                }
                clamp(last)
            })
            .collect(),
        SolarNoise::Empirical { samples } => {
            let pick = rng.random_range(0..samples.len());
            samples[pick].iter().map(|&w| clamp(w)).collect()
        }
    }
}

/// Draws `count` equiprobable scenarios.
///
/// Solar, parking and deferrable blocks of each scenario come from separate
/// random streams derived from `(rng_seed, scenario index)`, so the result
/// does not depend on thread scheduling.
pub fn generate(
    spec: &GenerationSpec,
    config: &MicrogridConfig,
    count: usize,
) -> Result<ScenarioSet, ScenarioError> {
    if count == 0 {
        return Err(ScenarioError::ZeroCount);
    }
    spec.check(config)?;
    let t_len = config.horizon;
    let prob = 1.0 / count as f64;
    let scenarios = (0..count)
        .into_par_iter()
        .map(|s| {
            let solar = draw_solar(spec, config.solar_capacity, &mut substream(spec.rng_seed, s, SOLAR_STREAM));
            let mut rng = substream(spec.rng_seed, s, PARKING_STREAM);
            let parking = (0..config.phevs.len())
                .map(|m| (0..t_len).map(|t| rng.random::<f64>() < spec.parking_prob.at(m, t)).collect())
                .collect();
            let mut rng = substream(spec.rng_seed, s, DEFERRABLE_STREAM);
            let deferrable_energy = config
                .deferrables
                .iter()
                .enumerate()
                .map(|(j, load)| {
                    let mean = spec.deferrable_energy_mean[j];
                    let spread = spec.deferrable_energy_spread[j];
                    let e = if spread > 0.0 {
                        rng.random_range(mean - spread..=mean + spread)
                    } else {
                        mean
                    };
                    let (lo, hi) = load.energy_range(config.period_hours);
                    e.clamp(lo.max(0.0), hi.max(lo.max(0.0)))
                })
                .collect();
            Scenario {
                probability: prob,
                solar,
                parking,
                deferrable_energy,
            }
        })
        .collect();
    Ok(ScenarioSet { scenarios })
}

/// Per-block scale factors of the scenario metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceWeights {
    pub solar: f64,
    pub parking: f64,
    pub deferrable: f64,
}

impl Default for DistanceWeights {
    fn default() -> Self {
        DistanceWeights {
            solar: 1.0,
            parking: 1.0,
            deferrable: 1.0,
        }
    }
}

impl DistanceWeights {
    /// Scales each block by the reciprocal of its probability-weighted
    /// standard deviation over `set`, pooled across coordinates. Blocks
    /// without spread get weight 1.
    pub fn normalized(set: &ScenarioSet) -> Self {
        let total = set.total_probability();
        if set.is_empty() || total <= 0.0 {
            return DistanceWeights::default();
        }
        let pooled_std = |extract: &dyn Fn(&Scenario) -> Vec<f64>| -> f64 {
            let first = extract(&set.scenarios[0]);
            let dim = first.len();
            if dim == 0 {
                return 0.0;
            }
            let mut mean = vec![0.0; dim];
            for s in &set.scenarios {
                for (m, v) in mean.iter_mut().zip(extract(s)) {
                    *m += s.probability * v / total;
                }
            }
            let mut var = 0.0;
            for s in &set.scenarios {
                for (m, v) in mean.iter().zip(extract(s)) {
                    var += s.probability * (v - m) * (v - m) / total;
                }
            }
            (var / dim as f64).sqrt()
        };
        let weight = |sd: f64| if sd > 0.0 { 1.0 / sd } else { 1.0 };
        DistanceWeights {
            solar: weight(pooled_std(&|s| s.solar.clone())),
            parking: weight(pooled_std(&|s| {
                s.parking.iter().flatten().map(|&b| f64::from(u8::from(b))).collect()
            })),
            deferrable: weight(pooled_std(&|s| s.deferrable_energy.clone())),
        }
    }
}

/// Weighted Euclidean distance over solar, parking and deferrable blocks.
pub fn scenario_distance(a: &Scenario, b: &Scenario, weights: &DistanceWeights) -> Result<f64, ScenarioError> {
    if a.solar.len() != b.solar.len()
        || a.parking.len() != b.parking.len()
        || a.parking.iter().zip(&b.parking).any(|(x, y)| x.len() != y.len())
        || a.deferrable_energy.len() != b.deferrable_energy.len()
    {
        return Err(ScenarioError::Dimension("scenarios differ in shape".into()));
    }
    Ok(distance_unchecked(a, b, weights))
}

fn distance_unchecked(a: &Scenario, b: &Scenario, w: &DistanceWeights) -> f64 {
    let sq = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum() };
    let solar = sq(&a.solar, &b.solar);
    let parking = a
        .parking
        .iter()
        .zip(&b.parking)
        .map(|(x, y)| x.iter().zip(y).filter(|(p, q)| p != q).count())
        .sum::<usize>() as f64;
    let def = sq(&a.deferrable_energy, &b.deferrable_energy);
    (w.solar * w.solar * solar + w.parking * w.parking * parking + w.deferrable * w.deferrable * def).sqrt()
}

/// Dense symmetric matrix of pairwise scenario distances.
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(set: &ScenarioSet, weights: &DistanceWeights) -> Result<Self, ScenarioError> {
        set.validate()?;
        let n = set.len();
        let data = (0..n * n)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / n, k % n);
                distance_unchecked(&set.scenarios[i.min(j)], &set.scenarios[i.max(j)], weights)
            })
            .collect();
        Ok(DistanceMatrix { n, data })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// `sum over s not in subset of p_s * min over k in subset of d(s, k)`.
pub fn kantorovich_distance(
    full: &ScenarioSet,
    subset: &[usize],
    weights: &DistanceWeights,
) -> Result<f64, ScenarioError> {
    if subset.is_empty() {
        return Err(ScenarioError::EmptySubset);
    }
    if let Some(&bad) = subset.iter().find(|&&k| k >= full.len()) {
        return Err(ScenarioError::Dimension(format!("index {bad} out of range")));
    }
    let mut kept = vec![false; full.len()];
    for &k in subset {
        kept[k] = true;
    }
    let mut total = 0.0;
    for (s, sc) in full.scenarios.iter().enumerate() {
        if kept[s] {
            continue;
        }
        let mut best = f64::INFINITY;
        for &k in subset {
            best = best.min(scenario_distance(sc, &full.scenarios[k], weights)?);
        }
        total += sc.probability * best;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub original_count: usize,
    pub kept: usize,
    /// Original indices in the order they were selected.
    pub selection_order: Vec<usize>,
    /// Kantorovich distance after each selection step.
    pub step_distances: Vec<f64>,
    pub kantorovich_distance: f64,
    pub weights: DistanceWeights,
}

/// Fast-forward selection: greedily grows the kept set by the scenario that
/// minimizes the Kantorovich distance, then moves each discarded scenario's
/// probability to its nearest kept scenario. Ties go to the lowest index.
/// Kept scenarios are returned in their original order.
pub fn reduce_fast_forward(
    set: &ScenarioSet,
    keep: usize,
    weights: &DistanceWeights,
) -> Result<(ScenarioSet, ReductionReport), ScenarioError> {
    let n = set.len();
    if keep == 0 || keep > n {
        return Err(ScenarioError::KeepOutOfRange { keep, available: n });
    }
    let dist = DistanceMatrix::new(set, weights)?;
    reduce_with_matrix(set, keep, weights, &dist)
}

/// As [`reduce_fast_forward`], reusing a precomputed distance matrix.
pub fn reduce_with_matrix(
    set: &ScenarioSet,
    keep: usize,
    weights: &DistanceWeights,
    dist: &DistanceMatrix,
) -> Result<(ScenarioSet, ReductionReport), ScenarioError> {
    let n = set.len();
    if keep == 0 || keep > n {
        return Err(ScenarioError::KeepOutOfRange { keep, available: n });
    }
    if dist.len() != n {
        return Err(ScenarioError::Dimension("distance matrix does not match set".into()));
    }
    let prob: Vec<f64> = set.scenarios.iter().map(|s| s.probability).collect();
    let mut selected = vec![false; n];
    // distance of each scenario to the selected set
    let mut near = vec![f64::INFINITY; n];
    let mut order = Vec::with_capacity(keep);
    let mut steps = Vec::with_capacity(keep);
    for _ in 0..keep {
        let scores: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|u| {
                if selected[u] {
                    return f64::INFINITY;
                }
                (0..n)
                    .filter(|&k| !selected[k] && k != u)
                    .map(|k| prob[k] * near[k].min(dist.get(k, u)))
                    .sum()
            })
            .collect();
        let mut best = None;
        for (u, &z) in scores.iter().enumerate() {
            if !selected[u] && best.is_none_or(|(_, b)| z < b) {
                best = Some((u, z));
            }
        }
        let (u, z) = best.expect("keep <= n leaves a candidate");
        selected[u] = true;
        order.push(u);
        steps.push(z);
        for k in 0..n {
            near[k] = near[k].min(dist.get(k, u));
        }
    }

    let mut kept_idx: Vec<usize> = order.clone();
    kept_idx.sort_unstable();
    let mut new_prob = vec![0.0; n];
    for k in 0..n {
        if selected[k] {
            new_prob[k] += prob[k];
            continue;
        }
        let mut target = kept_idx[0];
        for &c in &kept_idx[1..] {
            if dist.get(k, c) < dist.get(k, target) {
                target = c;
            }
        }
        new_prob[target] += prob[k];
    }
    let scenarios = kept_idx
        .iter()
        .map(|&k| Scenario {
            probability: new_prob[k],
            ..set.scenarios[k].clone()
        })
        .collect();
    let report = ReductionReport {
        original_count: n,
        kept: keep,
        kantorovich_distance: *steps.last().expect("keep >= 1"),
        selection_order: order,
        step_distances: steps,
        weights: *weights,
    };
    Ok((ScenarioSet { scenarios }, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DeferrableLoad, GridTariff, Phev};
    use proptest::prelude::*;

    fn config(t: usize, phevs: usize) -> MicrogridConfig {
        MicrogridConfig {
            horizon: t,
            period_hours: 1.0,
            chp_units: vec![],
            phevs: vec![Phev::case_study(); phevs],
            deferrables: vec![DeferrableLoad {
                t_arrive: 1,
                t_depart: t,
                rate_min: 0.0,
                rate_max: 2.0,
                energy_nominal: 3.0,
            }],
            tariff: GridTariff {
                price_buy: vec![0.1; t],
                price_sell: vec![0.05; t],
                exchange_cap: vec![100.0; t],
            },
            base_power: vec![0.0; t],
            base_heat: vec![0.0; t],
            solar_capacity: 100.0,
        }
    }

    fn spec(t: usize, p: f64) -> GenerationSpec {
        GenerationSpec {
            solar_profile_mean: (0..t).map(|k| 10.0 * k as f64).collect(),
            solar_noise: SolarNoise::MultiplicativeLognormal { sigma: 0.3 },
            parking_prob: ParkingProb::Uniform(p),
            deferrable_energy_mean: vec![3.0],
            deferrable_energy_spread: vec![1.0],
            rng_seed: 42,
        }
    }

    fn point(p: f64, x: f64) -> Scenario {
        Scenario {
            probability: p,
            solar: vec![x],
            parking: vec![],
            deferrable_energy: vec![],
        }
    }

    #[test]
    fn even_probabilities() {
        let c = config(4, 2);
        let set = generate(&spec(4, 0.5), &c, 3000).unwrap();
        assert_eq!(set.len(), 3000);
        assert!(set.scenarios.iter().all(|s| s.probability == 1.0 / 3000.0));
        assert!((set.total_probability() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_count_rejected() {
        assert!(matches!(generate(&spec(4, 0.5), &config(4, 1), 0), Err(ScenarioError::ZeroCount)));
    }

    #[test]
    fn certain_parking() {
        let set = generate(&spec(5, 1.0), &config(5, 3), 50).unwrap();
        assert!(set.scenarios.iter().all(|s| s.parking.iter().flatten().all(|&b| b)));
    }

    #[test]
    fn parking_frequency_matches_probability() {
        let set = generate(&spec(4, 0.6), &config(4, 1), 10_000).unwrap();
        let hits = set.scenarios.iter().flat_map(|s| s.parking.iter().flatten()).filter(|&&b| b).count();
        let freq = hits as f64 / 40_000.0;
        // binomial sd is sqrt(0.24 / 40000) ~ 0.0024
        assert!((freq - 0.6).abs() < 0.02, "{freq}");
    }

    #[test]
    fn generation_is_deterministic_and_clamped() {
        let c = config(6, 2);
        let sp = GenerationSpec {
            solar_noise: SolarNoise::TruncatedNormal { sigma: 2.0 },
            ..spec(6, 0.5)
        };
        let a = generate(&sp, &c, 200).unwrap();
        let b = generate(&sp, &c, 200).unwrap();
        assert_eq!(a, b);
        for s in &a.scenarios {
            assert!(s.solar.iter().all(|&w| (0.0..=100.0).contains(&w)));
            assert!(s.deferrable_energy.iter().all(|&e| (2.0..=4.0).contains(&e)));
        }
        let other = generate(&GenerationSpec { rng_seed: 7, ..sp }, &c, 200).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn lognormal_noise_preserves_mean() {
        let c = MicrogridConfig {
            solar_capacity: 1e9,
            ..config(2, 0)
        };
        let sp = GenerationSpec {
            solar_profile_mean: vec![50.0, 50.0],
            deferrable_energy_mean: vec![3.0],
            ..spec(2, 0.5)
        };
        let set = generate(&sp, &c, 20_000).unwrap();
        let mean = set.scenarios.iter().map(|s| s.solar[0]).sum::<f64>() / 20_000.0;
        // sd of the sample mean is 50 * sqrt(e^0.09 - 1) / sqrt(20000) ~ 0.11
        assert!((mean - 50.0).abs() < 0.6, "{mean}");
    }

    #[test]
    fn empirical_resamples_given_trajectories() {
        let samples = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let sp = GenerationSpec {
            solar_noise: SolarNoise::Empirical { samples: samples.clone() },
            ..spec(2, 0.5)
        };
        let set = generate(&sp, &config(2, 1), 100).unwrap();
        assert!(set.scenarios.iter().all(|s| samples.contains(&s.solar)));
        assert!(set.scenarios.iter().any(|s| s.solar == samples[0]));
        assert!(set.scenarios.iter().any(|s| s.solar == samples[1]));
    }

    #[test]
    fn spec_shape_is_checked() {
        let bad = GenerationSpec {
            parking_prob: ParkingProb::PerVehicle(vec![0.5]),
            ..spec(3, 0.5)
        };
        assert!(matches!(generate(&bad, &config(3, 2), 5), Err(ScenarioError::InvalidSpec(_))));
    }

    #[test]
    fn distance_basics() {
        let w = DistanceWeights::default();
        let a = Scenario {
            probability: 0.5,
            solar: vec![1.0, 2.0],
            parking: vec![vec![true, false]],
            deferrable_energy: vec![3.0],
        };
        assert_eq!(scenario_distance(&a, &a, &w).unwrap(), 0.0);
        let mut b = a.clone();
        b.solar[1] += 3.0;
        assert_eq!(scenario_distance(&a, &b, &w).unwrap(), 3.0);
        let c = Scenario {
            probability: 0.5,
            solar: vec![4.0, 6.0],
            parking: vec![vec![false, false]],
            deferrable_energy: vec![1.0],
        };
        let w2 = DistanceWeights {
            solar: 0.5,
            parking: 2.0,
            deferrable: 3.0,
        };
        // hand computation: (0.5*3)^2 + (0.5*4)^2 + (2*1)^2 + (3*2)^2 = 2.25 + 4 + 4 + 36
        let oracle = (2.25f64 + 4.0 + 4.0 + 36.0).sqrt();
        assert!((scenario_distance(&a, &c, &w2).unwrap() - oracle).abs() < 1e-12);
        assert_eq!(scenario_distance(&a, &c, &w2).unwrap(), scenario_distance(&c, &a, &w2).unwrap());
        let short = Scenario {
            solar: vec![1.0],
            ..a.clone()
        };
        assert!(scenario_distance(&a, &short, &w).is_err());
    }

    #[test]
    fn kantorovich_two_points() {
        let set = ScenarioSet::new(vec![point(0.5, 0.0), point(0.5, 4.0)]);
        let w = DistanceWeights::default();
        assert_eq!(kantorovich_distance(&set, &[0], &w).unwrap(), 2.0);
        assert_eq!(kantorovich_distance(&set, &[0, 1], &w).unwrap(), 0.0);
        assert!(matches!(kantorovich_distance(&set, &[], &w), Err(ScenarioError::EmptySubset)));
    }

    #[test]
    fn keep_all_is_identity() {
        let set = generate(&spec(3, 0.5), &config(3, 2), 12).unwrap();
        let w = DistanceWeights::normalized(&set);
        let (red, rep) = reduce_fast_forward(&set, 12, &w).unwrap();
        assert_eq!(red, set);
        assert_eq!(rep.kantorovich_distance, 0.0);
        assert!(reduce_fast_forward(&set, 13, &w).is_err());
        assert!(reduce_fast_forward(&set, 0, &w).is_err());
    }

    #[test]
    fn line_reduction_matches_exhaustive_greedy() {
        let pts = [(0.1, 0.0), (0.3, 1.0), (0.2, 2.5), (0.25, 6.0), (0.15, 7.0)];
        let set = ScenarioSet::new(pts.iter().map(|&(p, x)| point(p, x)).collect());
        let w = DistanceWeights::default();
        let (red, rep) = reduce_fast_forward(&set, 2, &w).unwrap();
        // first step: argmin over singletons; second: argmin over pairs containing it
        let single = (0..5)
            .map(|u| (u, kantorovich_distance(&set, &[u], &w).unwrap()))
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        let pair = (0..5)
            .filter(|&u| u != single.0)
            .map(|u| (u, kantorovich_distance(&set, &[single.0, u], &w).unwrap()))
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        assert_eq!(rep.selection_order, vec![single.0, pair.0]);
        assert!((rep.kantorovich_distance - pair.1).abs() < 1e-12);
        assert!((red.total_probability() - 1.0).abs() < 1e-12);
        assert_eq!(red.len(), 2);
    }

    #[test]
    fn probability_goes_to_nearest_kept() {
        let set = ScenarioSet::new(vec![point(0.25, 0.0), point(0.25, 1.0), point(0.25, 10.0), point(0.25, 11.0)]);
        let (red, rep) = reduce_fast_forward(&set, 2, &DistanceWeights::default()).unwrap();
        assert_eq!(rep.selection_order.len(), 2);
        assert!(red.scenarios.iter().all(|s| (s.probability - 0.5).abs() < 1e-12));
        assert_eq!(rep.kantorovich_distance, 0.5);
    }

    #[test]
    fn csv_and_json_round_trip() {
        let set = generate(&spec(3, 0.5), &config(3, 2), 7).unwrap();
        let dir = tempfile::tempdir().unwrap();
        set.write_csv_bundle(dir.path()).unwrap();
        assert_eq!(ScenarioSet::read_csv_bundle(dir.path()).unwrap(), set);
        assert_eq!(ScenarioSet::from_json(&set.to_json().unwrap()).unwrap(), set);
    }

    #[test]
    fn expected_scenario_rounds_parking() {
        let mk = |p: f64, w: f64, park: bool| Scenario {
            probability: p,
            solar: vec![w],
            parking: vec![vec![park]],
            deferrable_energy: vec![w],
        };
        let set = ScenarioSet::new(vec![mk(0.5, 0.0, true), mk(0.5, 100.0, false)]);
        let m = set.expected_scenario();
        assert_eq!(m.solar, vec![50.0]);
        assert_eq!(m.parking, vec![vec![true]]);
        let set = ScenarioSet::new(vec![mk(0.4, 0.0, true), mk(0.6, 100.0, false)]);
        assert_eq!(set.expected_scenario().parking, vec![vec![false]]);
    }

    fn random_set() -> impl Strategy<Value = ScenarioSet> {
        prop::collection::vec((0.01f64..1.0, prop::collection::vec(-5.0f64..5.0, 2)), 2..=10).prop_map(|v| {
            let total: f64 = v.iter().map(|(p, _)| p).sum();
            ScenarioSet::new(
                v.into_iter()
                    .map(|(p, x)| Scenario {
                        probability: p / total,
                        solar: x,
                        parking: vec![],
                        deferrable_energy: vec![],
                    })
                    .collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn reduction_is_monotone_and_greedy(set in random_set()) {
            let w = DistanceWeights::default();
            let n = set.len();
            let mut prev = f64::INFINITY;
            for keep in 1..=n {
                let (red, rep) = reduce_fast_forward(&set, keep, &w).unwrap();
                prop_assert!(rep.kantorovich_distance <= prev + 1e-12);
                prev = rep.kantorovich_distance;
                prop_assert!((red.total_probability() - 1.0).abs() < 1e-9);
                let direct = kantorovich_distance(&set, &rep.selection_order, &w).unwrap();
                prop_assert!((direct - rep.kantorovich_distance).abs() < 1e-9);
            }
            prop_assert!(prev.abs() < 1e-12);
        }
    }
}
