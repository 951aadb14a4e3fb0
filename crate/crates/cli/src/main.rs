//! Command-line toolkit for Grassmannian diffusion maps: embeddings,
//! kernel statistics, clustering, and sparse-representation classification,
//! all emitting CSV/JSON artifacts with a checksummed run report.

mod commands;
mod config;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Errors carry the exit-code taxonomy: 2 = configuration, 3 = input data,
/// 4 = numerical failure.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Data(_) => "data",
            CliError::Numerical(_) => "numerical",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<grassdm::Error> for CliError {
    fn from(e: grassdm::Error) -> Self {
        use grassdm::Error as E;
        match &e {
            E::Dimension(_) | E::InvalidBandwidth(_) | E::ShapeMismatch(_) | E::Index(_) => {
                CliError::Config(e.to_string())
            }
            E::EmptyClass(_) => CliError::Data(e.to_string()),
            other if other.is_data_error() => CliError::Data(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "grassdm",
    version,
    about = "Grassmannian diffusion maps: subspace embeddings, kernels, clustering, classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a dataset (or a built-in demo) into diffusion coordinates
    Embed(commands::embed::EmbedArgs),
    /// Monte Carlo sweep of off-diagonal kernel statistics over p
    KernelStats(commands::kernel_stats::KernelStatsArgs),
    /// Generate random fields, embed, k-means, score against true labels
    Cluster(commands::cluster::ClusterArgs),
    /// Sparse-representation classification over diffusion coordinates
    Classify(commands::classify::ClassifyArgs),
    /// Two-cone dataset: subspace embedding next to the conventional one
    DemoSphere(commands::demo::DemoSphereArgs),
    /// Balanced random-field dataset written as a train/test directory tree
    DemoRandomfield(commands::demo::DemoFieldArgs),
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Embed(args) => commands::embed::run(args),
        Command::KernelStats(args) => commands::kernel_stats::run(args),
        Command::Cluster(args) => commands::cluster::run(args),
        Command::Classify(args) => commands::classify::run(args),
        Command::DemoSphere(args) => commands::demo::run_sphere(args),
        Command::DemoRandomfield(args) => commands::demo::run_field(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("GRASSDM_LOG")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({
                "error": { "kind": err.kind(), "message": err.message() }
            });
            eprintln!("{payload}");
            ExitCode::from(err.exit_code())
        }
    }
}

/// Applies `--threads`; must run before any parallel work.
fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(count) = threads {
        if count == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(count)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}
