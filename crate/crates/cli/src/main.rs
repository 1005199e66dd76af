//! `egoclusters`: ingest a graph, build ego clusters, randomize, simulate
//! and analyze, one subcommand per stage.

mod commands;
mod sidecar;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "egoclusters",
    version,
    about = "Ego-network cluster randomization for A/B tests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate an edge list and write its canonical form and a summary.
    Ingest(IngestArgs),
    /// Build ego clusters.
    Cluster(ClusterArgs),
    /// Randomize clusters into treatment and control.
    Assign(AssignArgs),
    /// Ego-level t-tests with optional A/A and representativity checks.
    Analyze(AnalyzeArgs),
    /// Synthetic graphs, outcomes and Monte Carlo studies.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Per-draw clustering diagnostics.
    Diagnose(DiagnoseArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct IngestArgs {
    /// Edge list: `src dst [weight]` per line, `#` comments.
    #[arg(long)]
    pub graph: PathBuf,
    /// Also write degree bins with this many quantile bins (needs --seed).
    #[arg(long, requires = "seed")]
    pub bins: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Naive,
    Stratified,
}

#[derive(Args, Debug, Serialize)]
pub struct ClusterArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum)]
    pub algo: Algo,
    /// Per-ego loss cap (stratified).
    #[arg(long, default_value_t = 0.2)]
    pub target_loss: f64,
    /// Number of degree bins (stratified).
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Reattach leftover neighbors of egos after stratified clustering.
    #[arg(long)]
    pub reattach: bool,
    /// Trailing mean loss at which the naive run stops.
    #[arg(long, default_value_t = 0.3)]
    pub stop_loss: f64,
    /// Trailing window of the naive stop rule.
    #[arg(long, default_value_t = 20)]
    pub window: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct AssignArgs {
    /// `clusters.json` written by `cluster`.
    #[arg(long)]
    pub clusters: PathBuf,
    /// all-treated, all-control, match-alters or independent.
    #[arg(long)]
    pub mode: String,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long)]
    pub seed: u64,
    /// Warn when the clustering is older than this many days.
    #[arg(long, default_value_t = 30)]
    pub max_age_days: i64,
    /// Graph of the clustering; adds an exposure summary.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct AnalyzeArgs {
    /// `assignment.json` written by `assign`.
    #[arg(long)]
    pub assignment: PathBuf,
    /// Outcome table: `member_id` column plus one column per metric.
    #[arg(long)]
    pub outcomes: PathBuf,
    /// Pre-experiment table for the A/A check.
    #[arg(long)]
    pub pre: Option<PathBuf>,
    /// Comma-separated metrics; all columns when omitted.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    pub aa_level: f64,
    /// Graph and clustering for the representativity check.
    #[arg(long, requires = "clusters")]
    pub graph: Option<PathBuf>,
    #[arg(long, requires = "graph")]
    pub clusters: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Subcommand, Debug)]
enum SimulateCommand {
    /// Generate a synthetic graph.
    Graph(GraphArgs),
    /// Simulate outcomes for an assignment.
    Outcomes(OutcomeArgs),
    /// Run a study from a TOML or JSON config.
    Study(StudyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    ErdosRenyi,
    PowerLaw,
    DisjointStars,
}

#[derive(Args, Debug, Serialize)]
pub struct GraphArgs {
    #[arg(long, value_enum)]
    pub generator: GeneratorKind,
    #[arg(long, default_value_t = 1000)]
    pub nodes: usize,
    #[arg(long, default_value_t = 10.0)]
    pub mean_degree: f64,
    #[arg(long, default_value_t = 2.5)]
    pub exponent: f64,
    #[arg(long, default_value_t = 100)]
    pub stars: usize,
    #[arg(long, default_value_t = 5)]
    pub leaves: usize,
    /// `unit`, `uniform:LOW:HIGH` or `exponential:MEAN`.
    #[arg(long, default_value = "unit")]
    pub weights: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Linear,
    Concave,
    Convex,
    Logistic,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    Gaussian,
    Lognormal,
}

#[derive(Args, Debug, Serialize)]
pub struct OutcomeArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub assignment: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub baseline: f64,
    #[arg(long, default_value_t = 0.0)]
    pub direct_effect: f64,
    #[arg(long, default_value_t = 0.0)]
    pub network_effect: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    #[arg(long, value_enum, default_value_t = Shape::Linear)]
    pub shape: Shape,
    #[arg(long, value_enum, default_value_t = Noise::Gaussian)]
    pub noise: Noise,
    /// Also write a pre-period table (`pre.tsv`) with independent noise.
    #[arg(long)]
    pub pre: bool,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct StudyArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub clusters: PathBuf,
    /// Rolling window over accepted egos.
    #[arg(long, default_value_t = 20)]
    pub window: usize,
    /// Graph of the clustering; adds representativity and leftover reports.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Per-member metrics compared alongside degree.
    #[arg(long, requires = "graph")]
    pub metrics_table: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// How a successful run ended.
pub enum Status {
    Done,
    AaFailed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(&a),
        Command::Cluster(a) => commands::cluster(&a),
        Command::Assign(a) => commands::assign(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Simulate(SimulateCommand::Graph(a)) => commands::simulate_graph(&a),
        Command::Simulate(SimulateCommand::Outcomes(a)) => commands::simulate_outcomes(&a),
        Command::Simulate(SimulateCommand::Study(a)) => commands::simulate_study(&a),
        Command::Diagnose(a) => commands::diagnose(&a),
    };
    match result {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::AaFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
