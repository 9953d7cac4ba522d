//! `resistor-sep`: potential theory, exclusion dynamics and local-ergodicity
//! checks on finite weighted graphs.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "resistor-sep", version, about = "Resistance networks and exclusion processes on weighted graphs")]
pub struct Cli {
    /// Worker threads (0 = all cores); falls back to RESISTOR_SEP_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a graph from a named family.
    Generate(GenerateArgs),
    /// Effective resistances between vertex pairs.
    Resistance(ResistanceArgs),
    /// Mean exit times from a vertex set.
    ExitTime(ExitTimeArgs),
    /// Trace network on a boundary set.
    Trace(TraceArgs),
    /// Stationary one-site marginal of the boundary-driven process.
    Marginal(MarginalArgs),
    /// Volume and time scales along an exhaustion.
    Scaling(ScalingArgs),
    /// Simulate the exclusion process.
    Simulate(SimulateArgs),
    /// Run a verification suite on a graph.
    Verify(VerifyArgs),
    /// Run a Monte Carlo experiment from a key = value config.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FamilyName {
    Path,
    Sg,
    Box,
    Vicsek,
    Carpet,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub family: FamilyName,
    /// Path length, gasket/Vicsek/carpet level, or box side.
    #[arg(long, visible_alias = "level")]
    pub n: usize,
    /// Dimension of a lattice box.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Attach reservoirs `lambda_plus,lambda_minus` at the family's corners.
    #[arg(long, value_parser = parse_rates)]
    pub corner_reservoirs: Option<(f64, f64)>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ResistanceArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Source vertex id (default: the first vertex).
    #[arg(long)]
    pub x: Option<u64>,
    /// Target vertex id (default: every other vertex).
    #[arg(long)]
    pub y: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExitTimeArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Comma-separated vertex ids of the set to leave.
    #[arg(long, value_delimiter = ',', required = true)]
    pub set: Vec<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Boundary vertex ids (default: the reservoirs in the graph file).
    #[arg(long, value_delimiter = ',')]
    pub boundary: Vec<u64>,
    /// Largest accepted row-sum and partition-of-unity residual.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MarginalArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Largest accepted disagreement between the two solutions.
    #[arg(long, default_value_t = resistor_sep::potential::DUALITY_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VolumeArg {
    Measure,
    Count,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ExitArg {
    Max,
    Origin,
}

#[derive(Args, Debug)]
pub struct ScalingArgs {
    /// Exhaustion family (`sg` or `path`) used when no graph is given.
    #[arg(long, default_value = "sg")]
    pub family: String,
    /// Highest level of the family exhaustion.
    #[arg(long, default_value_t = 5)]
    pub levels: usize,
    /// Mother graph; needs `--origin` and `--radii`.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub origin: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub radii: Vec<usize>,
    #[arg(long, value_enum, default_value = "measure")]
    pub volume_mode: VolumeArg,
    #[arg(long, value_enum, default_value = "max")]
    pub exit_mode: ExitArg,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ObserveArg {
    Occupation,
    BlockAverages,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// `auto` or a positive number.
    #[arg(long, default_value = "auto")]
    pub time_scale: String,
    #[arg(long)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1)]
    pub trajectories: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "occupation")]
    pub observe: ObserveArg,
    /// Evenly spaced observation times, including 0 and the horizon.
    #[arg(long, default_value_t = 11)]
    pub snapshots: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub suite: String,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.5")]
    pub alpha: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = resistor_sep::harness::DEFAULT_DENSITY_SAMPLES)]
    pub samples: usize,
    /// Vertex id the local checks are centred at (default: the first vertex).
    #[arg(long)]
    pub center: Option<u64>,
    /// Local bundle: occupation, pairs, pairs-c or edge.
    #[arg(long, default_value = "pairs-c")]
    pub bundle: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Curve table.
    #[arg(long)]
    pub out: PathBuf,
    /// Full JSON report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn parse_rates(text: &str) -> Result<(f64, f64), String> {
    let (a, b) = text.split_once(',').ok_or("expected `lambda_plus,lambda_minus`")?;
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn thread_count(flag: Option<usize>) -> Result<usize, String> {
    match flag {
        Some(n) => Ok(n),
        None => match std::env::var("RESISTOR_SEP_THREADS") {
            Ok(v) => v.trim().parse().map_err(|_| format!("RESISTOR_SEP_THREADS = `{v}` is not a count")),
            Err(_) => Ok(0),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let threads = match thread_count(cli.threads) {
        Ok(n) => n,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(2);
    }
    match commands::run(cli.command) {
        Ok(commands::Outcome::Passed) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
