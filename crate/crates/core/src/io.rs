//! JSON configuration ingestion with optional CSV-backed time series.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ChpUnit, DeferrableLoad, GridTariff, MicrogridConfig, Phev};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Series { path: PathBuf, message: String },
}

/// A time series given inline or as a named column of a CSV file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeriesSource {
    Inline(Vec<f64>),
    Csv { csv: PathBuf, column: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TariffFile {
    price_buy: SeriesSource,
    price_sell: SeriesSource,
    exchange_cap: SeriesSource,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ConfigFile {
    horizon: usize,
    #[serde(default = "one")]
    period_hours: f64,
    chp_units: Vec<ChpUnit>,
    #[serde(default)]
    phevs: Vec<Phev>,
    #[serde(default)]
    deferrables: Vec<DeferrableLoad>,
    tariff: TariffFile,
    base_power: SeriesSource,
    base_heat: SeriesSource,
    solar_capacity: f64,
}

fn one() -> f64 {
    1.0
}

/// Resolves series relative to a base directory, caching parsed CSV files.
pub struct SeriesResolver {
    base: PathBuf,
    cache: HashMap<PathBuf, (Vec<String>, Vec<Vec<String>>)>,
}

impl SeriesResolver {
    pub fn new(base: impl Into<PathBuf>) -> Self {
        SeriesResolver {
            base: base.into(),
            cache: HashMap::new(),
        }
    }

    pub fn resolve(&mut self, source: &SeriesSource) -> Result<Vec<f64>, IngestError> {
        let (file, column) = match source {
            SeriesSource::Inline(v) => return Ok(v.clone()),
            SeriesSource::Csv { csv, column } => (self.base.join(csv), column),
        };
        if !self.cache.contains_key(&file) {
            let mut r = csv::Reader::from_path(&file).map_err(|source| IngestError::Csv {
                path: file.clone(),
                source,
            })?;
            let csv_err = |source| IngestError::Csv {
                path: file.clone(),
                source,
            };
            let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(|h| h.trim().to_string()).collect();
            let mut rows = Vec::new();
            for rec in r.records() {
                rows.push(rec.map_err(csv_err)?.iter().map(str::to_string).collect());
            }
            self.cache.insert(file.clone(), (header, rows));
        }
        let (header, rows) = &self.cache[&file];
        let series_err = |message: String| IngestError::Series {
            path: file.clone(),
            message,
        };
        let k = header
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| series_err(format!("no column named {column:?}")))?;
        rows.iter()
            .enumerate()
            .map(|(i, row)| {
                let cell = row.get(k).map(|c| c.trim()).unwrap_or("");
                cell.parse::<f64>()
                    .map_err(|e| series_err(format!("row {}, column {column:?}: {e}", i + 2)))
            })
            .collect()
    }
}

/// Parses a configuration document; CSV paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path, origin: &Path) -> Result<MicrogridConfig, IngestError> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|source| IngestError::Json {
        path: origin.to_path_buf(),
        source,
    })?;
    let mut res = SeriesResolver::new(base);
    Ok(MicrogridConfig {
        horizon: file.horizon,
        period_hours: file.period_hours,
        chp_units: file.chp_units,
        phevs: file.phevs,
        deferrables: file.deferrables,
        tariff: GridTariff {
            price_buy: res.resolve(&file.tariff.price_buy)?,
            price_sell: res.resolve(&file.tariff.price_sell)?,
            exchange_cap: res.resolve(&file.tariff.exchange_cap)?,
        },
        base_power: res.resolve(&file.base_power)?,
        base_heat: res.resolve(&file.base_heat)?,
        solar_capacity: file.solar_capacity,
    })
}

pub fn load_config(path: &Path) -> Result<MicrogridConfig, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")), path)
}
