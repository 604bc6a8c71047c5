//! Command-line front end: dataset generation, training, evaluation and
//! single-instance solving.

use std::path::{Path, PathBuf};

use beamfair::{ErrorKind, NetworkConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub mod commands;
pub mod manifest;
pub mod solve_output;

pub use manifest::RunManifest;
pub use solve_output::SolveOutput;

/// Exit status for malformed command lines and missing inputs.
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_IO: u8 = 4;
pub const EXIT_DIMENSION: u8 = 5;
pub const EXIT_DATA: u8 = 6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] beamfair::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Config => EXIT_CONFIG,
                ErrorKind::Io => EXIT_IO,
                ErrorKind::Dimension => EXIT_DIMENSION,
                ErrorKind::Data => EXIT_DATA,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "beamfair", version, about = "Beam configuration and max-min fair uplink power control")]
pub struct Cli {
    /// Worker threads; 1 is the reference mode. Defaults to all cores.
    #[arg(long, global = true, env = "BEAMFAIR_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the default network configuration as TOML.
    InitConfig(InitConfigArgs),
    /// Sample scenarios and label them with a search oracle.
    Gen(GenArgs),
    /// Train the beam-configuration network on a labeled dataset.
    Train(TrainArgs),
    /// Compare methods by mean solution efficiency on a labeled test set.
    Eval(EvalArgs),
    /// Solve one instance and print the allocation.
    Solve(SolveArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct InitConfigArgs {
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    C1,
    C2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleArg {
    Exhaustive,
    Sa,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    /// TOML network configuration; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of records. The full-scale setting is 1000000.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = Mode::C1)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = OracleArg::Exhaustive)]
    pub oracle: OracleArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Disk center and radius in meters for `--mode c2`.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub center_x: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub center_y: f64,
    #[arg(long, default_value_t = 15.0)]
    pub radius: f64,
    /// Annealing steps when `--oracle sa`.
    #[arg(long, default_value_t = 200)]
    pub sa_steps: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 512)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',', default_values_t = vec![200, 200])]
    pub hidden: Vec<usize>,
    #[arg(long)]
    pub out_model: PathBuf,
    /// Per-epoch CSV log; defaults to `<out-model>.log.csv`.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Exhaustive,
    Sa,
    Neural,
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NaiveModeArg {
    Joint,
    Marginal,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Labeled test set.
    #[arg(long)]
    pub data: PathBuf,
    /// Network checkpoint, required for `neural`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Labeled training set, required for `naive`.
    #[arg(long)]
    pub train_data: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = vec![MethodArg::Exhaustive])]
    pub methods: Vec<MethodArg>,
    #[arg(long, default_value_t = 100)]
    pub fp_iters: usize,
    #[arg(long, default_value_t = 200)]
    pub sa_steps: usize,
    #[arg(long, default_value_t = 0.1)]
    pub sa_temperature: f64,
    #[arg(long, default_value_t = 0.98)]
    pub sa_cooling: f64,
    /// Master seed of the per-sample annealing runs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = NaiveModeArg::Joint)]
    pub naive_mode: NaiveModeArg,
    /// CSV report.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional SVG plot of the report.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Exhaustive,
    Sa,
    Neural,
    /// Use the beam configuration given by `--widths` and `--directions`.
    Given,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV with columns `x_m,y_m,tx_direction_deg`, one row per UE.
    #[arg(long, conflicts_with = "seed")]
    pub scenario_file: Option<PathBuf>,
    /// Draw a uniform scenario from this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = SolveMethod::Exhaustive)]
    pub method: SolveMethod,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Beamwidth set indices per AP for `--method given`.
    #[arg(long, value_delimiter = ',')]
    pub widths: Vec<usize>,
    /// Direction set indices per AP for `--method given`.
    #[arg(long, value_delimiter = ',')]
    pub directions: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub fp_iters: usize,
    #[arg(long, default_value_t = 200)]
    pub sa_steps: usize,
}

pub(crate) fn load_config(path: Option<&Path>) -> CliResult<NetworkConfig> {
    let cfg = match path {
        Some(p) => NetworkConfig::load(p)?,
        None => NetworkConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a parsed command line, inside a dedicated pool when `--threads` is set.
pub fn run(cli: Cli) -> CliResult<()> {
    let threads = cli.threads;
    match threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
            pool.install(|| dispatch(cli.command, threads))
        }
        None => dispatch(cli.command, threads),
    }
}

fn dispatch(command: Command, threads: Option<usize>) -> CliResult<()> {
    match command {
        Command::InitConfig(a) => commands::init_config(&a),
        Command::Gen(a) => commands::gen(&a, threads),
        Command::Train(a) => commands::train(&a, threads),
        Command::Eval(a) => commands::eval(&a, threads),
        Command::Solve(a) => {
            let out = commands::solve(&a)?;
            print!("{}", out.render());
            Ok(())
        }
    }
}
