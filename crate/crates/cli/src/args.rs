use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tourist_core::LowLevelSpec;

#[derive(Debug, Parser)]
#[command(name = "tourist", version, about = "Hybrid classification with tourist walks on class networks")]
pub struct Cli {
    /// Worker threads; 0 lets the pool pick one per core.
    #[arg(long, global = true, env = "TOURIST_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// Seed for every random choice (fold splits, generated data).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// CSV output path; stdout when omitted.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the training network and dump it as an edge list.
    BuildNet(BuildNetArgs),
    /// Run one tourist walk from every vertex at a fixed memory length.
    WalkStats(WalkStatsArgs),
    /// Classify a test file with a model fit on the training data.
    Classify(ClassifyArgs),
    /// Repeated stratified cross-validation over a λ/α grid.
    Cv(CvArgs),
    /// Run an experiment described in a TOML file.
    Sweep(SweepArgs),
    /// Write a synthetic dataset as CSV.
    GenData(GenDataArgs),
    /// Per-class walk profiles and the memory length where they flatten.
    Saturation(SaturationArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Training data as CSV.
    #[arg(long, conflicts_with_all = ["images", "labels"], required_unless_present = "images")]
    pub data: Option<PathBuf>,

    /// IDX image file (gzip allowed); needs --labels.
    #[arg(long, requires = "labels")]
    pub images: Option<PathBuf>,

    /// IDX label file (gzip allowed); needs --images.
    #[arg(long, requires = "images")]
    pub labels: Option<PathBuf>,

    /// The CSV has no header row.
    #[arg(long)]
    pub no_header: bool,

    /// Zero-based label column; the last column by default.
    #[arg(long)]
    pub label_column: Option<usize>,

    /// Feature kinds, one letter per feature column: n numeric, c categorical.
    #[arg(long)]
    pub kinds: Option<String>,

    /// Z-score numeric features with training statistics.
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Debug, Args)]
pub struct NetArgs {
    /// Neighbors per vertex when its radius set is small.
    #[arg(long, default_value_t = 3)]
    pub k: usize,

    /// Radius of the dense-region rule.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,

    /// Radius used when inserting test instances; --epsilon by default.
    #[arg(long)]
    pub test_epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct HighArgs {
    /// Weight of the transient-length term.
    #[arg(long, default_value_t = 0.5)]
    pub alpha_t: f64,

    /// Weight of the cycle-length term.
    #[arg(long, default_value_t = 0.5)]
    pub alpha_c: f64,

    /// Critical memory length.
    #[arg(long, conflicts_with = "mu_c_frac")]
    pub mu_c: Option<usize>,

    /// Critical memory length as a fraction of the largest class.
    #[arg(long, default_value_t = 0.3)]
    pub mu_c_frac: f64,

    /// Walk topology for the high level: network or networkless.
    #[arg(long, default_value = "network")]
    pub topology: String,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub net: NetArgs,

    #[command(flatten)]
    pub high: HighArgs,

    /// Low-level classifier: wknn:K, gnb or linear:LR,EPOCHS,SEED.
    #[arg(long, default_value = "wknn:3")]
    pub low_level: LowLevelSpec,

    /// Fold each classified instance into the network.
    #[arg(long, conflicts_with = "discard")]
    pub absorb: bool,

    /// Leave the network unchanged after classification (default).
    #[arg(long)]
    pub discard: bool,
}

#[derive(Debug, Args)]
pub struct BuildNetArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub net: NetArgs,
}

#[derive(Debug, Args)]
pub struct WalkStatsArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub net: NetArgs,

    /// Memory length.
    #[arg(long, default_value_t = 1)]
    pub mu: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportKind {
    Labels,
    Memberships,
    Both,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Instances to classify, as CSV in the training layout.
    #[arg(long)]
    pub test: PathBuf,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Compliance term: weight of the high-level membership.
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,

    #[arg(long, value_enum, default_value_t = ReportKind::Labels)]
    pub report: ReportKind,

    /// Also report the smallest λ at which each instance goes to this class.
    #[arg(long, value_name = "CLASS")]
    pub lambda_min: Option<String>,

    /// Grid step for --lambda-min.
    #[arg(long, default_value_t = 0.01)]
    pub lambda_step: f64,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    /// λ values to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
    pub lambdas: Vec<f64>,

    /// Sweep α_t over a grid with this step (α_c = 1 - α_t) instead of the
    /// single --alpha-t/--alpha-c pair.
    #[arg(long)]
    pub alpha_step: Option<f64>,

    /// Critical memory lengths to sweep.
    #[arg(long, value_delimiter = ',')]
    pub mu_c_grid: Vec<usize>,

    #[arg(long, default_value_t = 10)]
    pub folds: usize,

    #[arg(long, default_value_t = 10)]
    pub reps: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Experiment file; relative data paths resolve against its directory.
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SceneKind {
    Lozenge,
    LineRect,
    Gaussian,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, value_enum)]
    pub scene: SceneKind,

    /// Class overlap for gaussian: separated, slight or heavy.
    #[arg(long, default_value = "heavy")]
    pub separation: String,

    /// Points per class for gaussian.
    #[arg(long, default_value_t = 200)]
    pub n: usize,

    /// Where to write a scene's test points.
    #[arg(long)]
    pub test_output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SaturationArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub net: NetArgs,

    /// Largest memory length to profile; one past the largest class by default.
    #[arg(long)]
    pub mu_max: Option<usize>,
}
