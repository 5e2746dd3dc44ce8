//! Command-line runner for temporal-graph homophily analytics.
//!
//! Subcommands wire ingestion, simulation, measurement, propagation, bound
//! grids, theory validation, and correlation into reproducible batch runs.
//! All randomness flows from `--seed` through named derived streams; every
//! output embeds its resolved configuration, tabular outputs are CSV with a
//! header row, and structured outputs are JSON with a `schema_version`
//! field.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

#[derive(Parser)]
#[command(name = "dynhom", version, about = "Temporal-graph homophily analytics")]
pub struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 uses all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Output path (file or directory, command-dependent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON configuration file (command-dependent schema).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Discretize a temporal edge list into a graph directory.
    Ingest(IngestArgs),
    /// Generate synthetic structures and run the SI process.
    Simulate(SimulateArgs),
    /// Homophily series (and optionally per-layer AUROC records).
    Measure(MeasureArgs),
    /// Dump per-layer linear-GCN representations.
    Propagate(PropagateArgs),
    /// Evaluate the AUROC upper bound on a homophily grid.
    BoundGrid(BoundGridArgs),
    /// Monte Carlo validation of the closed-form theory.
    Validate(ValidateArgs),
    /// Spearman correlation between homophily and AUROC series.
    Correlate(CorrelateArgs),
}

#[derive(Args)]
pub struct IngestArgs {
    /// Temporal edge list (`src dst time` lines, `#` comments).
    #[arg(long)]
    pub edges: PathBuf,
    /// Label file (`node timestep class` lines).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Window size on the event time axis.
    #[arg(long, conflicts_with = "preset")]
    pub window: Option<f64>,
    /// Documented window presets: uci (2000), bitcoin (1000), math (12000).
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Time origin: subtracted from all timestamps before windowing.
    #[arg(long, default_value = "min")]
    pub origin: String,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Preset {
    Uci,
    Bitcoin,
    Math,
}

impl Preset {
    pub fn window(self) -> f64 {
        match self {
            Preset::Uci => 2000.0,
            Preset::Bitcoin => 1000.0,
            Preset::Math => 12000.0,
        }
    }
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub structure: Structure,
    #[arg(long, default_value_t = 1000)]
    pub nodes: usize,
    /// Degree for the regular structure.
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    /// Edges attached per new node for the powerlaw structure.
    #[arg(long, default_value_t = 3)]
    pub edges_per_node: usize,
    /// Community count for the block structure.
    #[arg(long, default_value_t = 20)]
    pub communities: usize,
    #[arg(long, default_value_t = 0.10)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.001)]
    pub p_out: f64,
    /// Largest timestep index T; the run covers T + 1 snapshots.
    #[arg(long, default_value_t = 30)]
    pub timesteps: usize,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    /// Search Beta means for full infection before simulating.
    #[arg(long)]
    pub calibrate: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Structure {
    Regular,
    Powerlaw,
    Block,
}

#[derive(Args)]
pub struct MeasureArgs {
    /// Graph directory (as written by `ingest` or `simulate`).
    #[arg(long)]
    pub graph: PathBuf,
    /// Layer counts; enables per-layer AUROC/bound records.
    #[arg(long, value_delimiter = ',')]
    pub layers: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Mode::All)]
    pub mode: Mode,
    /// Gaussian model mean magnitude override for the bound.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Gaussian model variance override for the bound.
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long, value_enum, default_value_t = DenomArg::Variance)]
    pub denominator: DenomArg,
    /// Also write per-timestep compatibility matrices as JSON.
    #[arg(long)]
    pub compat_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Mode {
    All,
    Unreached,
}

impl From<Mode> for dynhom::analysis::MaskMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::All => dynhom::analysis::MaskMode::All,
            Mode::Unreached => dynhom::analysis::MaskMode::Unreached,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum DenomArg {
    Variance,
    Stddev,
}

impl From<DenomArg> for dynhom::theory::Denominator {
    fn from(d: DenomArg) -> Self {
        match d {
            DenomArg::Variance => dynhom::theory::Denominator::Variance,
            DenomArg::Stddev => dynhom::theory::Denominator::StdDev,
        }
    }
}

#[derive(Args)]
pub struct PropagateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub timestep: usize,
    /// Deepest layer to dump (layers 0..=L are written).
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
}

#[derive(Args)]
pub struct BoundGridArgs {
    #[arg(long, default_value_t = 101)]
    pub resolution: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    pub layers: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[arg(long, value_enum, default_value_t = DenomArg::Variance)]
    pub denominator: DenomArg,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub layers: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
}

#[derive(Args)]
pub struct CorrelateArgs {
    /// Records CSV as written by `measure --layers ...`.
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub layer: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    #[cfg(feature = "parallel")]
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    #[cfg(not(feature = "parallel"))]
    if cli.threads > 1 {
        eprintln!("warning: built without the parallel feature; --threads ignored");
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
