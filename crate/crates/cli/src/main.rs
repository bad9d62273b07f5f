use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use mgs_cli::artifacts::write_json;
use mgs_cli::manifest::{GenerationSource, DEFAULT_SOLAR_LEVELS, DEFAULT_WINDOW_WIDTHS};
use mgs_cli::pipeline::{self, load_config, load_generation_spec, load_scenarios};
use mgs_cli::{Experiment, PipelineError, RunManifest};
use mgs_core::scenario::{reduce_fast_forward, DistanceWeights};
use mgs_core::{generate, ParkingMode, StageMode};

/// Stochastic day-ahead scheduling for a microgrid with CHP units, PHEVs,
/// deferrable loads and solar.
#[derive(Parser)]
#[command(name = "mgs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write the schedule with its reports.
    Run(RunArgs),
    /// Compare stochastic and deterministic costs across solar levels.
    SweepSolar {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated multipliers of installed solar capacity.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
    },
    /// Stochastic cost as the deferrable windows widen.
    SweepWindow {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated window widths in periods.
        #[arg(long, value_delimiter = ',')]
        widths: Option<Vec<usize>>,
    },
    /// Stochastic solution against the mean-scenario plan.
    Compare(RunArgs),
    /// Write the instance as fixed-format MPS without solving.
    ExportMps(RunArgs),
    /// Generate or reduce scenario sets.
    #[command(subcommand)]
    Scenarios(ScenarioCommand),
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Draw scenarios from a generation spec.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = mgs_cli::manifest::DEFAULT_GENERATE)]
        count: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for `scenarios.json` and the CSV bundle.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Reduce a scenario set by fast forward selection.
    Reduce {
        /// A scenario JSON file or CSV bundle directory.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = mgs_cli::manifest::DEFAULT_KEEP)]
        keep: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Run manifest; other flags override its fields.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Microgrid configuration, when no manifest is given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generation spec JSON.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Ready scenario set, instead of generating one.
    #[arg(long)]
    scenarios: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    keep: Option<usize>,
    #[arg(long)]
    generate: Option<usize>,
    #[arg(long, value_enum)]
    stage_mode: Option<StageArg>,
    #[arg(long, value_enum)]
    parking_mode: Option<ParkingArg>,
    /// Add binaries forbidding simultaneous charge and discharge.
    #[arg(long)]
    exclusivity: bool,
    #[arg(long)]
    curtailment_penalty: Option<f64>,
    #[arg(long)]
    write_mps: bool,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum StageArg {
    FullyAdaptive,
    DayAheadChp,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum ParkingArg {
    ScenarioData,
    DecisionBinary,
}

impl RunArgs {
    fn manifest(&self) -> Result<RunManifest> {
        let mut m = match (&self.manifest, &self.config) {
            (Some(path), _) => {
                let mut m = RunManifest::load(path)?;
                if let Some(c) = &self.config {
                    m.config = c.clone();
                }
                m
            }
            (None, Some(c)) => RunManifest::for_config(c),
            (None, None) => bail!(PipelineError::Ingest("give --manifest or --config".into())),
        };
        if let Some(s) = &self.spec {
            m.generation = Some(GenerationSource::Path(s.clone()));
            m.scenarios = None;
        }
        if let Some(s) = &self.scenarios {
            m.scenarios = Some(s.clone());
            m.generation = None;
        }
        if let Some(seed) = self.seed {
            let source = m
                .generation
                .as_ref()
                .ok_or_else(|| PipelineError::Ingest("--seed needs a generation spec".into()))?;
            let mut spec = load_generation_spec(source)?;
            spec.rng_seed = seed;
            m.generation = Some(GenerationSource::Inline(spec));
        }
        if let Some(o) = &self.out {
            m.output = o.clone();
        }
        if let Some(k) = self.keep {
            m.keep = k;
        }
        if let Some(g) = self.generate {
            m.generate = g;
        }
        if let Some(s) = self.stage_mode {
            m.formulation.stage_mode = match s {
                StageArg::FullyAdaptive => StageMode::FullyAdaptive,
                StageArg::DayAheadChp => StageMode::DayAheadChp,
            };
        }
        if let Some(p) = self.parking_mode {
            m.formulation.parking_mode = match p {
                ParkingArg::ScenarioData => ParkingMode::ScenarioData,
                ParkingArg::DecisionBinary => ParkingMode::DecisionBinary,
            };
        }
        if self.exclusivity {
            m.formulation.exclusivity_binaries = true;
        }
        if let Some(p) = self.curtailment_penalty {
            m.formulation.curtailment_penalty = Some(p);
        }
        if self.write_mps {
            m.write_mps = true;
        }
        m.validate()?;
        Ok(m)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let m = args.manifest()?;
            match m.experiment.clone() {
                Experiment::Single => single(&m),
                Experiment::SolarSweep { levels } => solar(&m, &levels),
                Experiment::WindowSweep { widths } => window(&m, &widths),
                Experiment::StochasticVsDeterministic => compare(&m),
            }
        }
        Command::SweepSolar { run, levels } => {
            let m = run.manifest()?;
            let levels = levels.or(match m.experiment.clone() {
                Experiment::SolarSweep { levels } => Some(levels),
                _ => None,
            });
            solar(&m, &levels.unwrap_or_else(|| DEFAULT_SOLAR_LEVELS.to_vec()))
        }
        Command::SweepWindow { run, widths } => {
            let m = run.manifest()?;
            let widths = widths.or(match m.experiment.clone() {
                Experiment::WindowSweep { widths } => Some(widths),
                _ => None,
            });
            window(&m, &widths.unwrap_or_else(|| DEFAULT_WINDOW_WIDTHS.to_vec()))
        }
        Command::Compare(args) => compare(&args.manifest()?),
        Command::ExportMps(args) => {
            let path = pipeline::run_export_mps(&args.manifest()?)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Scenarios(ScenarioCommand::Generate {
            config,
            spec,
            count,
            seed,
            out,
        }) => {
            let config = load_config(&config)?;
            let mut spec = load_generation_spec(&GenerationSource::Path(spec))?;
            if let Some(seed) = seed {
                spec.rng_seed = seed;
            }
            let set = generate(&spec, &config, count).map_err(|e| PipelineError::Ingest(e.to_string()))?;
            write_json(&out.join("scenarios.json"), &set)?;
            set.write_csv_bundle(&out).context("writing CSV bundle")?;
            println!("wrote {} scenarios to {}", set.len(), out.display());
            Ok(())
        }
        Command::Scenarios(ScenarioCommand::Reduce { input, keep, out }) => {
            let set = load_scenarios(&input)?;
            let weights = DistanceWeights::normalized(&set);
            let (reduced, report) =
                reduce_fast_forward(&set, keep, &weights).map_err(|e| PipelineError::Ingest(e.to_string()))?;
            write_json(&out.join("scenarios.json"), &reduced)?;
            write_json(&out.join("reduction_report.json"), &report)?;
            println!(
                "kept {} of {} scenarios, Kantorovich distance {}",
                reduced.len(),
                set.len(),
                report.kantorovich_distance
            );
            Ok(())
        }
    }
}

fn single(m: &RunManifest) -> Result<()> {
    let outcome = pipeline::run_single(m)?;
    let rep = outcome.solved.report();
    println!(
        "optimal: expected cost {:.6}, objective {:.6}, {} rows, {} columns, {} nodes",
        outcome.expected_cost, outcome.solved.solution.objective, rep.rows, rep.columns, rep.nodes
    );
    println!("wrote {}", m.output.display());
    Ok(())
}

fn solar(m: &RunManifest, levels: &[f64]) -> Result<()> {
    for r in pipeline::run_solar_sweep(m, levels)? {
        println!(
            "level {:>5}: stochastic {:>14} deterministic {:>14} {}",
            r.level,
            fmt_opt(r.stochastic),
            fmt_opt(r.deterministic),
            r.error.unwrap_or_default()
        );
    }
    println!("wrote {}", m.output.join("solar_sweep.csv").display());
    Ok(())
}

fn window(m: &RunManifest, widths: &[usize]) -> Result<()> {
    for r in pipeline::run_window_sweep(m, widths)? {
        println!("width {:>3}: cost {:>14} {}", r.width, fmt_opt(r.cost), r.error.unwrap_or_default());
    }
    println!("wrote {}", m.output.join("window_sweep.csv").display());
    Ok(())
}

fn compare(m: &RunManifest) -> Result<()> {
    let r = pipeline::run_compare(m)?;
    println!("stochastic    {:.6}", r.stochastic_cost);
    println!("mean scenario {:.6}", r.expected_value_cost);
    println!("deterministic {}", fmt_opt(r.deterministic_cost));
    println!("VSS           {}", fmt_opt(r.vss));
    if !r.flagged.is_empty() {
        println!("flagged scenarios {:?}", r.flagged);
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MGS_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {
            info!("done");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<PipelineError>().map_or(1, PipelineError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
