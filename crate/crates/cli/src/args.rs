use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "affdim", version, about = "Dimension diagnostics for affine iterated function systems")]
pub struct Cli {
    /// Worker threads (0 or unset: all cores).
    #[arg(long, global = true, env = "AFFDIM_THREADS")]
    pub threads: Option<usize>,

    /// Master seed for every Monte-Carlo stage.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Membership margin, strong separation, domination and pinching/twisting.
    Check(CheckArgs),
    /// Affinity dimension bracket and Lyapunov spectra.
    Dimension(DimensionArgs),
    /// Point clouds, renders and box counting.
    Attractor(AttractorArgs),
    /// End-to-end pipeline comparing the box dimension with the bracket.
    Verify(VerifyArgs),
    /// Grassmannian orbit and limit residuals.
    Furstenberg(FurstenbergArgs),
    /// Transversality constant and small-distance tail.
    Transversality(TransversalityArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check(_) => "check",
            Command::Dimension(_) => "dimension",
            Command::Attractor(_) => "attractor",
            Command::Verify(_) => "verify",
            Command::Furstenberg(_) => "furstenberg",
            Command::Transversality(_) => "transversality",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Certificate {
    Member,
    Ssc,
    Domination,
    Pinching,
}

impl Certificate {
    pub fn as_str(self) -> &'static str {
        match self {
            Certificate::Member => "member",
            Certificate::Ssc => "ssc",
            Certificate::Domination => "domination",
            Certificate::Pinching => "pinching",
        }
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub spec: PathBuf,

    /// Longest word length in the domination test.
    #[arg(long, default_value_t = 8)]
    pub domination_n: usize,

    /// Longest word length in the pinching/twisting search.
    #[arg(long, default_value_t = 6)]
    pub pinch_len: usize,

    /// Certificates that must hold for exit code 0.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Certificate::Member, Certificate::Ssc])]
    pub require: Vec<Certificate>,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    /// Symbols per Lyapunov trial.
    #[arg(long, default_value_t = 20_000)]
    pub mc_steps: usize,

    /// Independent Lyapunov trials.
    #[arg(long, default_value_t = 8)]
    pub trials: usize,
}

#[derive(Debug, Args)]
pub struct DimensionArgs {
    pub spec: PathBuf,

    /// Word length of the pressure sums and of the subsystem measure.
    #[arg(long, default_value_t = 8)]
    pub level: usize,

    #[command(flatten)]
    pub mc: McArgs,

    /// Bisection tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct AttractorArgs {
    pub spec: PathBuf,

    /// Number of random points (ignored with --exhaustive).
    #[arg(long, default_value_t = 100_000)]
    pub points: usize,

    /// Truncation depth; with --exhaustive the word length.
    #[arg(long)]
    pub depth: Option<usize>,

    /// One point per word of length --depth instead of random sampling.
    #[arg(long)]
    pub exhaustive: bool,

    /// Binary PPM render of the first two coordinates.
    #[arg(long)]
    pub render: Option<PathBuf>,

    #[arg(long, default_value_t = 800)]
    pub width: usize,

    #[arg(long, default_value_t = 800)]
    pub height: usize,

    /// CSV export of the cloud.
    #[arg(long)]
    pub csv: Option<PathBuf>,

    /// Fit the box-counting dimension.
    #[arg(long)]
    pub box_dim: bool,

    /// Scales run over R·2^-m for m = 0..=max-scale-exp.
    #[arg(long, default_value_t = 24)]
    pub max_scale_exp: i32,

    /// Fit the correlation dimension.
    #[arg(long)]
    pub correlation: bool,

    /// Histogram of local dimension estimates.
    #[arg(long)]
    pub local_dim: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Spec file; omit with --random-ensemble.
    pub spec: Option<PathBuf>,

    /// Run the pipeline on random members of the planar condition set.
    #[arg(long)]
    pub random_ensemble: bool,

    #[arg(long, default_value_t = 20)]
    pub ensemble_size: usize,

    /// Operator norm of every sampled matrix.
    #[arg(long, default_value_t = 0.3)]
    pub target_norm: f64,

    /// Ensemble pass rate needed for exit code 0.
    #[arg(long, default_value_t = 0.9)]
    pub min_pass_rate: f64,

    /// Points in the cloud (default 10^6, or 10^5 per ensemble member).
    #[arg(long)]
    pub points: Option<usize>,

    #[arg(long, default_value_t = 8)]
    pub level: usize,

    #[command(flatten)]
    pub mc: McArgs,

    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,

    /// Largest accepted |box dimension − bracket midpoint|.
    #[arg(long, default_value_t = 0.2)]
    pub tolerance: f64,

    /// Word pairs sampled for the transversality constant.
    #[arg(long, default_value_t = 10_000)]
    pub delta_samples: usize,

    /// Truncation depth of the transversality word pairs.
    #[arg(long, default_value_t = 40)]
    pub depth: usize,

    /// Length of the Grassmannian orbit.
    #[arg(long, default_value_t = 10_000)]
    pub orbit_steps: usize,
}

#[derive(Debug, Args)]
pub struct FurstenbergArgs {
    pub spec: PathBuf,

    /// Dimension of the subspaces in the orbit.
    #[arg(long, default_value_t = 1)]
    pub k: usize,

    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,

    /// Exponent of the projected singular value residual.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,

    #[arg(long, default_value_t = 100_000)]
    pub mc_steps: usize,

    #[arg(long, default_value_t = 8)]
    pub trials: usize,
}

#[derive(Debug, Args)]
pub struct TransversalityArgs {
    pub spec: PathBuf,

    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,

    #[arg(long, default_value_t = 40)]
    pub depth: usize,

    /// Repeat with twice the samples and report the relative change.
    #[arg(long)]
    pub stability: bool,

    /// Small-distance tail along the worst pair.
    #[arg(long)]
    pub tail: bool,

    #[arg(long, default_value_t = 100_000)]
    pub tail_samples: usize,
}
