use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hpricing::hiddenlp::GridProfile;

#[derive(Debug, Parser)]
#[command(name = "hprice", version, about = "Worst-case pricing ratios, certificates and bounds")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write results here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "HPRICE_JOBS")]
    pub jobs: Option<usize>,

    /// Grid resolution for the certification programs.
    #[arg(long, global = true, value_enum)]
    pub profile: Option<Profile>,

    /// Acknowledge that the paper profile runs for hours.
    #[arg(long, global = true)]
    pub long: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Coarse,
    Paper,
}

impl From<Profile> for GridProfile {
    fn from(p: Profile) -> Self {
        match p {
            Profile::Coarse => GridProfile::Coarse,
            Profile::Paper => GridProfile::Paper,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate quantities of one distribution.
    #[command(allow_negative_numbers = true)]
    Dist(DistArgs),
    /// Optimal discount for a statistic-based policy.
    #[command(allow_negative_numbers = true)]
    Optimize(OptimizeArgs),
    /// Optimal ratios across norm exponents or tail probabilities.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Certify a hidden-pricing ratio with the discretized programs.
    #[command(allow_negative_numbers = true)]
    VerifyGamma(VerifyArgs),
    /// Upper bound from the discretized weight program.
    #[command(allow_negative_numbers = true)]
    DualBound(DualArgs),
    /// Impossibility bounds.
    #[command(allow_negative_numbers = true)]
    Bounds(BoundsArgs),
    /// Analytic and Monte Carlo revenue of a mechanism.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// The 7/16 threshold mechanism on uniform valuations.
    #[command(allow_negative_numbers = true)]
    Uniform(UniformArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistKind {
    Check,
    Hat,
    Uniform,
}

#[derive(Debug, Args)]
pub struct DistSpec {
    /// Distribution as JSON, or `@path` to read it from a file.
    #[arg(long, conflicts_with = "kind")]
    pub json: Option<String>,

    #[arg(long, value_enum)]
    pub kind: Option<DistKind>,

    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    #[arg(long)]
    pub lambda: Option<f64>,

    #[arg(long)]
    pub a: Option<f64>,

    #[arg(long)]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistStat {
    Survival,
    Cdf,
    Mean,
    Lnorm,
    Var,
    Cvar,
    Opt,
    CriticalInterval,
    All,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    #[command(flatten)]
    pub dist: DistSpec,

    #[arg(long, value_enum, default_value = "all")]
    pub stat: DistStat,

    /// Point for survival and cdf.
    #[arg(long)]
    pub v: Option<f64>,

    #[arg(long, default_value_t = 2.0)]
    pub eta: f64,

    #[arg(long, default_value_t = 0.5)]
    pub q: f64,

    #[arg(long, default_value_t = 0.8)]
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatKind {
    Mean,
    Lnorm,
    Cvar,
    Var,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Auto,
    Normalized,
    TwoParam,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, value_enum)]
    pub stat: StatKind,

    #[arg(long, default_value_t = 1.37)]
    pub eta: f64,

    #[arg(long, default_value_t = 0.92)]
    pub q: f64,

    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    #[arg(long, value_enum, default_value = "auto")]
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Lnorm,
    Cvar,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: SweepParam,

    #[arg(long)]
    pub from: Option<f64>,

    #[arg(long)]
    pub to: Option<f64>,

    #[arg(long)]
    pub step: Option<f64>,

    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Bisect for the largest certified ratio in `[LO, HI]`.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], conflicts_with = "gamma")]
    pub search: Option<Vec<f64>>,

    #[arg(long, default_value_t = 1e-4)]
    pub resolution: f64,

    /// Write one `rule_<j>.csv` per feasible program here.
    #[arg(long)]
    pub rules_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DualArgs {
    #[arg(long, default_value_t = 0.796)]
    pub gamma: f64,

    #[arg(long, default_value_t = 1.95)]
    pub b: f64,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// `Γ_α` for this class.
    #[arg(long)]
    pub alpha: Option<f64>,

    /// The 7/8 bound for uniform valuations.
    #[arg(long)]
    pub uniform: bool,

    /// The concave-policy bound on a shifted distribution.
    #[arg(long)]
    pub concave: bool,

    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,

    #[arg(long, default_value_t = 1.7)]
    pub b: f64,

    /// `Γ_α` on an α grid with this step.
    #[arg(long)]
    pub figure3: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scoring rule as JSON, or `@path`.
    #[arg(long, required_unless_present = "manifest")]
    pub rule: Option<String>,

    #[command(flatten)]
    pub dist: DistSpec,

    /// TOML or JSON file with an `experiments` list.
    #[arg(long, conflicts_with = "rule")]
    pub manifest: Option<PathBuf>,

    #[arg(long)]
    pub n: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct UniformArgs {
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,

    #[arg(long, default_value_t = 1.0)]
    pub b: f64,

    /// Minimize over all uniform distributions.
    #[arg(long)]
    pub scan: bool,
}
