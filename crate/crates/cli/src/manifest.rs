//! Run manifests: which inputs to load, how to build and solve, and where
//! to write results. Relative paths resolve against the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use mgs_core::scenario::DistanceWeights;
use mgs_core::{FormulationOptions, GenerationSpec, SolveSettings};
use serde::{Deserialize, Serialize};

use crate::PipelineError;

pub const DEFAULT_GENERATE: usize = 3000;
pub const DEFAULT_KEEP: usize = 25;
pub const DEFAULT_SOLAR_LEVELS: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.0];
pub const DEFAULT_WINDOW_WIDTHS: [usize; 5] = [2, 4, 8, 16, 24];

/// Where scenarios come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GenerationSource {
    Path(PathBuf),
    Inline(GenerationSpec),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    #[default]
    Single,
    /// Multipliers applied to installed solar capacity and the mean profile.
    SolarSweep { levels: Vec<f64> },
    /// Deferrable window widths in periods.
    WindowSweep { widths: Vec<usize> },
    StochasticVsDeterministic,
}

fn default_generate() -> usize {
    DEFAULT_GENERATE
}

fn default_keep() -> usize {
    DEFAULT_KEEP
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub config: PathBuf,
    /// Generation spec, inline or as a path to a JSON file.
    #[serde(default)]
    pub generation: Option<GenerationSource>,
    /// A ready scenario set (JSON file or CSV bundle directory), used
    /// instead of generation.
    #[serde(default)]
    pub scenarios: Option<PathBuf>,
    #[serde(default = "default_generate")]
    pub generate: usize,
    #[serde(default = "default_keep")]
    pub keep: usize,
    /// Metric weights; normalized by block spread when absent.
    #[serde(default)]
    pub distance_weights: Option<DistanceWeights>,
    #[serde(default)]
    pub formulation: FormulationOptions,
    #[serde(default)]
    pub solver: SolveSettings,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub write_mps: bool,
    #[serde(default)]
    pub experiment: Experiment,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Ingest(format!("{}: {e}", path.display())))?;
        let mut m: RunManifest =
            serde_json::from_str(&text).map_err(|e| PipelineError::Ingest(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        m.resolve_paths(base);
        m.validate()?;
        Ok(m)
    }

    /// A manifest for `config` with every other field at its default.
    pub fn for_config(config: impl Into<PathBuf>) -> Self {
        RunManifest {
            config: config.into(),
            generation: None,
            scenarios: None,
            generate: DEFAULT_GENERATE,
            keep: DEFAULT_KEEP,
            distance_weights: None,
            formulation: FormulationOptions::default(),
            solver: SolveSettings::default(),
            output: default_output(),
            write_mps: false,
            experiment: Experiment::Single,
        }
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.config);
        join(&mut self.output);
        if let Some(p) = self.scenarios.as_mut() {
            join(p);
        }
        if let Some(GenerationSource::Path(p)) = self.generation.as_mut() {
            join(p);
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Ingest(m));
        if self.generation.is_none() && self.scenarios.is_none() {
            return bad("manifest needs either `generation` or `scenarios`".into());
        }
        if self.generation.is_some() && self.scenarios.is_some() {
            return bad("manifest may give `generation` or `scenarios`, not both".into());
        }
        if self.generate == 0 || self.keep == 0 {
            return bad("`generate` and `keep` must be positive".into());
        }
        if self.generation.is_some() && self.keep > self.generate {
            return bad(format!("keep = {} exceeds generate = {}", self.keep, self.generate));
        }
        self.solver.validate().map_err(|e| PipelineError::Ingest(e.to_string()))?;
        match &self.experiment {
            Experiment::SolarSweep { levels } => check_sorted("levels", levels, |&l| l >= 0.0 && l.is_finite()),
            Experiment::WindowSweep { widths } => check_sorted("widths", widths, |&w| w >= 1),
            _ => Ok(()),
        }
    }
}

pub(crate) fn check_sorted<T: PartialOrd + std::fmt::Debug>(
    name: &str,
    values: &[T],
    valid: impl Fn(&T) -> bool,
) -> Result<(), PipelineError> {
    if values.is_empty() {
        return Err(PipelineError::Ingest(format!("{name} must be nonempty")));
    }
    if let Some(v) = values.iter().find(|v| !valid(v)) {
        return Err(PipelineError::Ingest(format!("{name}: invalid entry {v:?}")));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PipelineError::Ingest(format!("{name} must be strictly increasing")));
    }
    Ok(())
}
