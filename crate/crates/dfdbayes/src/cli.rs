//! Command-line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{BetaSpec, ExperimentKind, RunConfig};
use crate::error::RunError;
use crate::experiments;
use crate::formats::ingest_counts;

#[derive(Debug, Parser)]
#[command(name = "dfdbayes", version, about = "Generalised Bayesian inference with the discrete Fisher divergence")]
pub struct Cli {
    /// Worker threads for bootstrap replicates and chains (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate or ingest the configured data and write data.csv.
    Simulate(RunArgs),
    /// Bootstrap-calibrate beta for the primary loss.
    Calibrate(RunArgs),
    /// Calibrate if needed, then sample the primary posterior.
    Sample(RunArgs),
    /// Run a full experiment; the built-in desk-scale preset when no config is given.
    Experiment {
        kind: ExperimentKind,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Parse a count file and report its shape.
    IngestCheck { path: PathBuf },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `auto` or a nonnegative number, overriding the primary method's beta.
    #[arg(long)]
    pub beta: Option<BetaSpec>,
}

impl RunArgs {
    /// Loads the config (or `preset`) and applies the overrides.
    pub fn resolve(&self, preset: Option<ExperimentKind>) -> Result<RunConfig, RunError> {
        let mut cfg = match (&self.config, preset) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(kind)) => RunConfig::preset(kind),
            (None, None) => return Err(RunError::config("--config is required")),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(beta) = self.beta {
            cfg.beta = beta;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct IngestReport {
    n: usize,
    d: usize,
    column_means: Vec<f64>,
    column_max: Vec<i64>,
}

/// Runs a parsed command on the current thread pool.
pub fn run(command: &Command) -> Result<(), RunError> {
    match command {
        Command::Simulate(args) => {
            let cfg = args.resolve(None)?;
            let data = experiments::run_simulate(&cfg)?;
            println!("simulated n={} d={} into {}", data.len(), data.dim(), cfg.output_dir.display());
        }
        Command::Calibrate(args) => {
            let cfg = args.resolve(None)?;
            let result = experiments::run_calibrate(&cfg)?;
            println!(
                "beta*={} from B={} replicates ({} not converged) in {}",
                result.beta_star,
                result.replicates(),
                result.non_converged(),
                cfg.output_dir.display()
            );
        }
        Command::Sample(args) => {
            let cfg = args.resolve(None)?;
            let outcome = experiments::run_sample(&cfg)?;
            println!(
                "{}: beta={} posterior mean {:?} in {}",
                outcome.label,
                outcome.beta,
                outcome.marginals.mean,
                cfg.output_dir.display()
            );
        }
        Command::Experiment { kind, args } => {
            let cfg = args.resolve(Some(*kind))?;
            if cfg.experiment != *kind {
                return Err(RunError::config(format!(
                    "config is for experiment {:?}, not {:?}",
                    cfg.experiment.name(),
                    kind.name()
                )));
            }
            experiments::run_experiment(*kind, &cfg)?;
            println!("{} experiment written to {}", kind.name(), cfg.output_dir.display());
        }
        Command::IngestCheck { path } => {
            let data = ingest_counts(path)?;
            let column_max = (0..data.dim()).map(|j| data.iter().map(|x| x[j]).max().expect("nonempty data")).collect();
            let report = IngestReport { n: data.len(), d: data.dim(), column_means: data.column_means(), column_max };
            println!("{}", serde_json::to_string(&report).expect("report serialises"));
        }
    }
    Ok(())
}
