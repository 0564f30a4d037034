use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "proprio",
    version,
    about = "Terrain classification and lever-length filtering from rover force-torque and IMU telemetry",
    args_override_self = true
)]
pub struct Cli {
    /// TOML file with default option values; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Maximum number of worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// More log output; repeat for debug messages.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cut sensor logs into windows and write per-window statistics.
    Extract(ExtractArgs),
    /// Train an SVM (with grid search) or an MLP on extracted samples.
    Train(TrainArgs),
    /// Score a saved model on extracted samples.
    Evaluate(EvaluateArgs),
    /// Lever-length filtering, retention table and stable intervals.
    Drawbar(DrawbarArgs),
    /// Generate a synthetic traverse with known labels and lever lengths.
    Synth(SynthArgs),
    /// Render tables and SVG charts from the outputs of other subcommands.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Imu,
    Fts,
    All,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Imu => "imu",
            Variant::Fts => "fts",
            Variant::All => "all",
        }
    }

    /// Feature-name prefixes of this variant.
    pub fn prefixes(self) -> &'static [&'static str] {
        match self {
            Variant::Imu => &["imu_"],
            Variant::Fts => &["fts_"],
            Variant::All => &["imu_", "fts_"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Svm,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReductionArg {
    Ovr,
    Ovo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    All,
    Train,
    Test,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Sensor log; the sensor is taken from the file stem (e.g. `fts_fl.csv`,
    /// `imu.csv`) or given as `SENSOR=PATH`. Repeatable.
    #[arg(long = "input", value_name = "[SENSOR=]PATH")]
    pub inputs: Vec<String>,
    /// Directory whose `fts_*.csv` and `imu.csv` files are all loaded.
    #[arg(long, value_name = "DIR")]
    pub input_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Label intervals (`t_start,t_end,terrain`).
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    /// Sensors to compute features for.
    #[arg(long, value_enum, default_value = "all")]
    pub variant: Variant,
    /// Leave out the derived fx/tz channel.
    #[arg(long)]
    pub no_ratio: bool,
    /// Window length [s].
    #[arg(long, default_value_t = 1.0)]
    pub window: f64,
    /// Window stride [s] (default: the window length).
    #[arg(long)]
    pub stride: Option<f64>,
    /// Samples CSV to write; a `.meta.json` sidecar is written next to it.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Samples CSV written by `extract`.
    #[arg(long, value_name = "FILE")]
    pub samples: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Feature subset to train on.
    #[arg(long, value_enum, default_value = "all")]
    pub variant: Variant,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Seed of the train/test split and of MLP initialization and shuffling.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.25)]
    pub test_fraction: f64,

    /// SVM: multiclass reduction.
    #[arg(long, value_enum, default_value = "ovr", help_heading = "SVM")]
    pub reduction: ReductionArg,
    /// SVM: C values of the grid.
    #[arg(long = "c", value_delimiter = ',', action = ArgAction::Set, default_value = "0.1,1,10,100", help_heading = "SVM")]
    pub cs: Vec<f64>,
    /// SVM: gamma values of the grid.
    #[arg(long = "gamma", value_delimiter = ',', action = ArgAction::Set, default_value = "1,0.1,0.01,0.001", help_heading = "SVM")]
    pub gammas: Vec<f64>,
    /// SVM: kernels of the grid (linear, rbf, poly, sigmoid).
    #[arg(long = "kernels", value_delimiter = ',', action = ArgAction::Set, default_value = "linear,rbf,poly,sigmoid", help_heading = "SVM")]
    pub kernels: Vec<String>,
    /// SVM: KKT tolerance of the solver.
    #[arg(long, default_value_t = 1e-3, help_heading = "SVM")]
    pub tol: f64,
    /// SVM: iteration cap in multiples of the training-set size (default: 10 x samples, at least 1e6 updates in total).
    #[arg(long, help_heading = "SVM")]
    pub max_passes: Option<usize>,

    /// MLP: hidden layers.
    #[arg(long, default_value_t = 2, help_heading = "MLP")]
    pub hidden_layers: usize,
    /// MLP: units per hidden layer.
    #[arg(long, default_value_t = 64, help_heading = "MLP")]
    pub hidden_units: usize,
    #[arg(long, default_value_t = 0.1, help_heading = "MLP")]
    pub dropout_in: f64,
    #[arg(long, default_value_t = 0.2, help_heading = "MLP")]
    pub dropout_hidden: f64,
    #[arg(long, default_value_t = 32, help_heading = "MLP")]
    pub batch_size: usize,
    #[arg(long, default_value_t = 50, help_heading = "MLP")]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3, help_heading = "MLP")]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.9, help_heading = "MLP")]
    pub momentum: f64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Model file written by `train`.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Samples CSV written by `extract`.
    #[arg(long, value_name = "FILE")]
    pub samples: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Which labelled samples to score; `train`/`test` redo the stratified split.
    #[arg(long, value_enum, default_value = "all")]
    pub split: SplitArg,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.25)]
    pub test_fraction: f64,
}

#[derive(Debug, Args)]
pub struct DrawbarArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Tolerances of the retention table [cm].
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "5,2,1")]
    pub tolerances: Vec<f64>,
    /// Tolerance used for the lever series and stable intervals [cm] (default: the first tolerance).
    #[arg(long)]
    pub filter_tolerance: Option<f64>,
    /// Vertical distance from sensor to wheel axle [m].
    #[arg(long, default_value_t = 0.10)]
    pub sensor_to_axle: f64,
    /// Wheel diameter [m].
    #[arg(long, default_value_t = 0.15)]
    pub wheel_diameter: f64,
    /// Below this |Fx| [N] the lever length is undefined.
    #[arg(long, default_value_t = proprio::drawbar::EPS_FORCE)]
    pub eps_force: f64,
    /// Also reject points with |Fx| below this force [N].
    #[arg(long)]
    pub min_abs_fx: Option<f64>,
    /// Shortest stable interval [s].
    #[arg(long, default_value_t = 5.0)]
    pub min_duration: f64,
    /// Largest rolling standard deviation of the lever length [m].
    #[arg(long, default_value_t = 0.01)]
    pub max_std: f64,
    /// Rolling window for the lever-length standard deviation [s].
    #[arg(long, default_value_t = 1.0)]
    pub rolling_window: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Scenario TOML (segments, rates, speed, seed, profile overrides).
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,
    /// Seconds per terrain of the default four-terrain scenario.
    #[arg(long, default_value_t = 120.0)]
    pub seconds_per_class: f64,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Turn off all noise and impacts.
    #[arg(long)]
    pub noiseless: bool,
    /// True lever length for every terrain [m].
    #[arg(long)]
    pub lever: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Output directory of `train`, `evaluate` or `drawbar`. Repeatable.
    #[arg(long = "input", value_name = "DIR", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Directory for `report.txt` and the SVG charts.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}
