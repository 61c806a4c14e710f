//! `lbb`: generate channel datasets, train location-to-precoder networks,
//! evaluate them against baselines and run training-size sweeps.

mod commands;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use lbb::dataset::DATASET_FORMAT_VERSION;
use lbb::neuralnet::MODEL_FORMAT_VERSION;
use lbb::scene::SCENE_SCHEMA_VERSION;

#[derive(Debug, Parser)]
#[command(name = "lbb", about = "Location based beamforming workbench")]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Log more (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    /// Where to write the run manifest (default: next to the primary output).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample users in a scene and trace their channels into a dataset.
    Generate(GenerateArgs),
    /// Import channels and locations from CSV files.
    Ingest(IngestArgs),
    /// Train a precoding network on a dataset.
    Train(TrainArgs),
    /// Score a model or baseline on a dataset or over a scene grid.
    Eval(EvalArgs),
    /// Train on increasing dataset sizes and score on a shared test set.
    Sweep(SweepArgs),
    /// Re-run the invocation recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ArrayArgs {
    /// Antennas per side of the square array (A = side²).
    #[arg(long, default_value_t = 8)]
    pub side: u32,
    /// Carrier frequency in Hz.
    #[arg(long, default_value_t = 3.5e9)]
    pub carrier: f64,
    /// Element spacing in meters (default: half a wavelength).
    #[arg(long)]
    pub spacing: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Scene TOML file (default: the built-in desk scene).
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[command(flatten)]
    pub array: ArrayArgs,
    /// Number of users.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// CSV with 2A values per row: real parts, then imaginary parts.
    #[arg(long)]
    pub channels: PathBuf,
    /// CSV with 2 or 3 coordinates (meters) per row.
    #[arg(long)]
    pub locations: PathBuf,
    #[command(flatten)]
    pub array: ArrayArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArchArg {
    Rff,
    Mlp,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ArchArg::Rff)]
    pub arch: ArchArg,
    /// Number of random Fourier frequencies R.
    #[arg(long, default_value_t = 1000)]
    pub rff: usize,
    /// Frequency length scale 1/s in meters.
    #[arg(long, default_value_t = 50.0)]
    pub sigma_inv: f64,
    /// Number of layers after the feature layer (Q).
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    /// Hidden width M.
    #[arg(long, default_value_t = 512)]
    pub width: usize,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 100)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Seed for initialization and minibatch order.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed of the frequency matrix B (default: --seed).
    #[arg(long)]
    pub rff_seed: Option<u64>,
    /// Hold out this fraction of the dataset; train on the rest.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch cost CSV (default: <out>.cost.csv).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Direction,
    Oracle,
    OrthogonalOracle,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("precoder").required(true).args(["model", "baseline"])))]
#[command(group(clap::ArgGroup::new("source").required(true).args(["data", "grid_pitch"])))]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub baseline: Option<BaselineArg>,
    /// Dataset to score.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Score only the test part of this split of --data.
    #[arg(long, requires = "data")]
    pub test_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    /// Scene for grid evaluation, or for the base station pose of the
    /// direction baseline (default: the built-in desk scene).
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Lattice pitch in meters; evaluates on fresh channels over the scene.
    #[arg(long)]
    pub grid_pitch: Option<f64>,
    /// Array for baselines scored over a grid.
    #[command(flatten)]
    pub array: ArrayArgs,
    /// CDF table (CSV).
    #[arg(long)]
    pub cdf: Option<PathBuf>,
    /// Median, mean and counts (JSON).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Spatial map rendering (SVG); needs --grid-pitch.
    #[arg(long, requires = "grid_pitch")]
    pub heatmap: Option<PathBuf>,
    /// Spatial map values (CSV); needs --grid-pitch.
    #[arg(long, requires = "grid_pitch")]
    pub heatmap_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[command(flatten)]
    pub array: ArrayArgs,
    /// Training-set sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    pub eval_size: usize,
    /// Training set for size N is drawn with seed + N; also seeds training.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1 << 32)]
    pub eval_seed: u64,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest_file: PathBuf,
}

fn version_text() -> &'static str {
    let text = format!(
        "{} (dataset format {DATASET_FORMAT_VERSION}, model format {MODEL_FORMAT_VERSION}, scene schema {SCENE_SCHEMA_VERSION})",
        lbb::TOOL_VERSION
    );
    Box::leak(text.into_boxed_str())
}

/// Parses `args` (program name first).
pub fn parse<I, T>(args: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = Cli::command().version(version_text()).try_get_matches_from(args)?;
    Cli::from_arg_matches(&matches)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match parse(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::run(cli, args[1..].to_vec()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
