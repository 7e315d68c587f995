//! `fulfillkit` command-line front end.

pub mod artifacts;
pub mod commands;
pub mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fulfillkit_core::evaluation::Pairing;
use fulfillkit_core::features::TimePoint;
use fulfillkit_core::ErrorKind;

pub use config::{RunConfig, ConfigErrors};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "fulfillkit", version, about = "Predict whether crowdfunding rewards ship on time, and how long they take")]
pub struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides run.master_seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Time points to process, e.g. `--tp TP1,TP4` (overrides run.time_points).
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_tp)]
    pub tp: Vec<TimePoint>,
    /// Output directory (overrides run.out_dir).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (overrides run.jobs).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

fn parse_tp(s: &str) -> Result<TimePoint, String> {
    s.parse().map_err(|e: fulfillkit_core::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairingArg {
    PerFold,
    PerProject,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// JSON file holding one project record.
    #[arg(long, conflicts_with = "project_id")]
    pub project: Option<PathBuf>,
    /// Predict for a project of the configured corpus instead.
    #[arg(long)]
    pub project_id: Option<String>,
    /// JSONL activity events for `--project`.
    #[arg(long, requires = "project")]
    pub events: Option<PathBuf>,
    /// Observation time (unix seconds). Defaults to the latest event, or the
    /// launch time when there are no events.
    #[arg(long)]
    pub as_of: Option<i64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labeled corpus.
    Synth,
    /// Train word vectors on reward descriptions.
    Embed,
    /// Cluster words and rewards; write the semantic model and difficulty table.
    Cluster,
    /// Extract feature matrices per time point.
    Featurize,
    /// Run VIF, Boruta and stepwise selection per time point.
    Select,
    /// Fit the delivery-status classifier per time point.
    TrainClassifier,
    /// Fit the delivery-duration regressor per time point.
    TrainRegressor,
    /// Cross-validate models and baselines; write the report.
    Evaluate {
        /// Pairing for the signed-rank test against the baseline.
        #[arg(long, value_enum)]
        pairing: Option<PairingArg>,
    },
    /// Score one project at every available time point.
    Predict(PredictArgs),
    /// Accuracy with each feature group left out.
    Ablate,
    /// Validate a configuration and report every problem.
    CheckConfig,
    /// Print the default configuration.
    DefaultConfig,
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigErrors),
    Core(fulfillkit_core::Error),
}

impl From<fulfillkit_core::Error> for CliError {
    fn from(e: fulfillkit_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Config => EXIT_CONFIG,
                ErrorKind::Data => EXIT_DATA,
                ErrorKind::Numeric => EXIT_NUMERIC,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "error: {e}"),
        }
    }
}

/// Resolves the configuration for a parsed command line.
pub fn resolve_config(cli: &Cli, env: &BTreeMap<String, String>) -> Result<RunConfig, ConfigErrors> {
    let mut c = RunConfig::resolve(cli.config.as_deref(), env, cli.seed)?;
    if let Some(out) = &cli.out {
        c.run.out_dir = out.clone();
    }
    if !cli.tp.is_empty() {
        let mut tps = cli.tp.clone();
        tps.sort();
        tps.dedup();
        c.run.time_points = tps;
    }
    if cli.jobs.is_some() {
        c.run.jobs = cli.jobs;
    }
    if c.run.jobs == Some(0) {
        return Err(ConfigErrors(vec!["--jobs must be at least 1".into()]));
    }
    if let Command::Evaluate { pairing: Some(p) } = &cli.command {
        c.evaluate.pairing = match p {
            PairingArg::PerFold => Pairing::PerFold,
            PairingArg::PerProject => Pairing::PerProject,
        };
    }
    Ok(c)
}

/// Runs one command line; returns the process exit code. Diagnostics go to
/// stderr, `predict` and `default-config` output to stdout.
pub fn run<I, T>(args: I, env: &BTreeMap<String, String>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Command::DefaultConfig = cli.command {
        print!("{}", config::default_config_toml());
        return EXIT_OK;
    }
    let cfg = match resolve_config(&cli, env) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    if let Command::CheckConfig = cli.command {
        eprintln!("config ok (hash {})", cfg.hash());
        return EXIT_OK;
    }
    if let Some(n) = cfg.run.jobs {
        // Fails only if a pool already exists in this process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match commands::dispatch(&cli.command, &cfg) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
