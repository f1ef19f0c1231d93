use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bayesloc",
    version,
    about = "Grid-based Bayesian RF localization: simulate, train, localize and evaluate",
    after_help = "Distances are in meters, signal levels in dBm, path-loss constants in dB.\n\
                  BAYESLOC_THREADS caps the worker count; results do not depend on it."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a seeded Monte Carlo experiment and write curves, table and manifest.
    Simulate(SimulateArgs),
    /// Build a fingerprint database from a trace CSV.
    TrainFingerprint(TrainArgs),
    /// Print MAP, MMSE, MEDE and MP estimates for one observation.
    Localize(LocalizeArgs),
    /// Dominance matrix, Θ, attainability and witness costs.
    Evaluate(EvaluateArgs),
    /// Estimate the envelope F* of all achievable error CDFs.
    Fstar(FstarArgs),
    /// Fingerprint error as a function of training-set size.
    LearningCurve(LearningArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricModeArg {
    /// Posterior-expected metrics per trial.
    Expected,
    /// Metrics scored against the drawn true location.
    Realized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Low,
    High,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// 50 m x 70 m floor, 16 random transmitters, sigma 16.16 dB, eta 3.93
    #[arg(long, conflicts_with_all = ["desk_scenario", "symmetric_demo", "db"])]
    pub paper_scenario: bool,

    /// 16 m x 16 m room, 4 random transmitters, sigma 4 dB, eta 3
    #[arg(long, conflicts_with_all = ["symmetric_demo", "db"])]
    pub desk_scenario: bool,

    /// 10 m x 10 m square whose posterior is always a centered Gaussian
    #[arg(long, conflicts_with = "db")]
    pub symmetric_demo: bool,

    /// Area for a custom path-loss scenario, WIDTHxHEIGHT [m]
    #[arg(long, value_parser = parse_space, default_value = "16x16")]
    pub space: (f64, f64),

    /// Grid spacing [m]; defaults to 0.5
    #[arg(long, value_parser = positive)]
    pub resolution: Option<f64>,

    /// Transmitters: CSV file with header `tx_id,x,y` [m], or random:N
    #[arg(long, default_value = "random:4")]
    pub txs: String,

    /// Path-loss constant K [dB]
    #[arg(long, default_value_t = -40.0, allow_negative_numbers = true)]
    pub k_db: f64,

    /// Path-loss exponent eta [dimensionless]
    #[arg(long, default_value_t = 3.0, value_parser = positive)]
    pub eta: f64,

    /// Shadowing standard deviation sigma [dB]
    #[arg(long, default_value_t = 4.0, value_parser = positive)]
    pub sigma: f64,

    /// Transmit power [dBm]
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub pt: f64,

    /// Reference distance d0 [m]
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub d0: f64,

    /// Fingerprint database JSON; switches to the fingerprint scenario
    #[arg(long)]
    pub db: Option<PathBuf>,

    /// Trace CSV whose scans are replayed as observations; needs --db
    #[arg(long, requires = "db")]
    pub replay: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Monte Carlo trials [count]
    #[arg(long, default_value_t = 2000, value_parser = at_least_one)]
    pub trials: usize,

    /// Master seed; also places random transmitters
    #[arg(long, default_value_t = 7)]
    pub seed: u64,

    /// Radius of the small MP window and of P(eps) [m]
    #[arg(long, default_value_t = 0.5, value_parser = positive)]
    pub epsilon: f64,

    /// Radius of the large MP window and of P(d) [m]
    #[arg(long, default_value_t = 3.0, value_parser = positive)]
    pub d: f64,

    /// Points on the error-distance grid [count]
    #[arg(long, default_value_t = 64, value_parser = at_least_two)]
    pub d_points: usize,

    /// How table metrics are scored
    #[arg(long, value_enum, default_value_t = MetricModeArg::Expected)]
    pub metrics: MetricModeArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Output directory for artifacts
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Relative tolerance of the attainability test [fraction]
    #[arg(long, default_value_t = 1e-9, value_parser = non_negative)]
    pub attainability_tol: f64,
    /// Optional output directory for artifacts
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FstarArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Monte Carlo trials [count]
    #[arg(long, default_value_t = 2000, value_parser = at_least_one)]
    pub trials: usize,
    /// Master seed; also places random transmitters
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Points on the error-distance grid [count]
    #[arg(long, default_value_t = 64, value_parser = at_least_two)]
    pub d_points: usize,
    /// Output directory; the curve goes to stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Trace CSV with header `rx_x,rx_y,tx_id,rssi_dbm[,timestamp]`
    #[arg(long)]
    pub traces: PathBuf,
    /// Histogram bin width [dB]
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub bin_width: f64,
    /// Additive smoothing per bin [pseudo-count]
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub smoothing: f64,
    /// Database JSON file to write
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Observation as tx=rssi pairs [dBm], comma separated or repeated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub obs: Vec<String>,
    /// File of tx=rssi pairs [dBm], one per line or comma separated
    #[arg(long)]
    pub obs_file: Option<PathBuf>,
    /// Master seed; places random transmitters
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Radius of the small MP window [m]
    #[arg(long, default_value_t = 0.5, value_parser = positive)]
    pub epsilon: f64,
    /// Radius of the large MP window [m]
    #[arg(long, default_value_t = 3.0, value_parser = positive)]
    pub d: f64,
    /// Write the posterior as `x,y,p` rows to this CSV
    #[arg(long)]
    pub dump_posterior: Option<PathBuf>,
    /// Built-in 1-D skewed density on [-1, 1] m instead of an observation
    #[arg(long, conflicts_with_all = ["obs", "obs_file"])]
    pub skewed_demo: bool,
}

#[derive(Debug, Args)]
pub struct LearningArgs {
    /// Trace CSV to learn from
    #[arg(long, conflicts_with = "synthetic")]
    pub traces: Option<PathBuf>,
    /// Generate a synthetic office survey with low or high RSS variance
    #[arg(long, value_enum)]
    pub synthetic: Option<ProfileArg>,
    /// Training fractions per location [fraction in (0, 1]]
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.4,0.6,0.8,1.0", value_parser = fraction)]
    pub fractions: Vec<f64>,
    /// Random train/test splits per fraction [count]
    #[arg(long, default_value_t = 100, value_parser = at_least_one)]
    pub repeats: usize,
    /// Master seed
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Output directory for learning_curve.csv
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must not be negative"))
    }
}

fn fraction(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} must lie in (0, 1]"))
    }
}

fn at_least(s: &str, min: usize) -> Result<usize, String> {
    let v: usize = s.trim().parse().map_err(|_| format!("`{s}` is not a count"))?;
    if v >= min {
        Ok(v)
    } else {
        Err(format!("{v} must be at least {min}"))
    }
}

fn at_least_one(s: &str) -> Result<usize, String> {
    at_least(s, 1)
}

fn at_least_two(s: &str) -> Result<usize, String> {
    at_least(s, 2)
}

fn parse_space(s: &str) -> Result<(f64, f64), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("`{s}` is not WIDTHxHEIGHT"))?;
    Ok((positive(w)?, positive(h)?))
}
