use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "qcvar", version, about = "Quasi-cointegration analysis for VARs with roots near unity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, value_enum, default_value = "text", global = true)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1, global = true)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// OLS and profile estimates, roots, QCS basis and half-lives.
    Fit(FitArgs),
    /// Characteristic roots and their classification.
    Roots(RootsArgs),
    /// Impulse responses split into near-unit and stable parts.
    Irf(IrfArgs),
    /// Likelihood-ratio statistics for Lambda and for one coefficient of A.
    Lr(LrArgs),
    /// Confidence sets for Lambda, conditional intervals and the Bonferroni interval.
    Ci(CiArgs),
    /// Build or extend a table of limit-distribution quantiles.
    Critvals(CritvalsArgs),
    /// Simulate paths from a VAR.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct Region {
    /// Radius separating near-unit from stable roots.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Half-life h in periods, giving rho = 2^(-1/h).
    #[arg(long)]
    pub half_life: Option<f64>,
}

#[derive(Debug, Clone, Args)]
#[group(required = false, multiple = false)]
pub struct OptRegion {
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub half_life: Option<f64>,
}

impl From<OptRegion> for Option<Region> {
    fn from(r: OptRegion) -> Self {
        (r.rho.is_some() || r.half_life.is_some()).then_some(Region { rho: r.rho, half_life: r.half_life })
    }
}

#[derive(Debug, Clone, Args)]
pub struct Model {
    /// CSV file with a header row, one column per series.
    #[arg(long)]
    pub data: PathBuf,
    /// Lag order.
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value = "trend", value_parser = ["trend", "const", "none"])]
    pub det: String,
}

#[derive(Debug, Clone, Args)]
pub struct Search {
    /// Number of near-unit roots; defaults to the count inside the region.
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, default_value = "scalar", value_parser = ["scalar", "symmetric", "normal"])]
    pub family: String,
    /// Spacing of the eigenvalue grid.
    #[arg(long)]
    pub grid_step: Option<f64>,
}

/// Either a data set (fitted by OLS) or inline coefficients.
#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// JSON list of k lag matrices, each a list of rows.
    #[arg(long)]
    pub coeffs: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SourceOpts {
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value = "trend", value_parser = ["trend", "const", "none"])]
    pub det: String,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: Model,
    #[command(flatten)]
    pub region: Region,
    #[command(flatten)]
    pub search: Search,
}

#[derive(Debug, Args)]
pub struct RootsArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub opts: SourceOpts,
    #[command(flatten)]
    pub region: Region,
}

#[derive(Debug, Args)]
pub struct IrfArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub opts: SourceOpts,
    #[command(flatten)]
    pub region: OptRegion,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub horizon: usize,
}

#[derive(Debug, Args)]
pub struct LrArgs {
    #[command(flatten)]
    pub model: Model,
    #[command(flatten)]
    pub region: Region,
    #[command(flatten)]
    pub search: Search,
    /// Hypothesized near-unit block, Lambda0 = lambda0 * I_q.
    #[arg(long)]
    pub lambda0: f64,
    /// Entry (i, j) of A, one-based.
    #[arg(long, requires = "a0")]
    pub coef: Option<String>,
    /// Hypothesized value of the selected entry.
    #[arg(long, requires = "coef", allow_negative_numbers = true)]
    pub a0: Option<f64>,
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, default_value_t = 0.025)]
    pub alpha1: f64,
    #[arg(long, default_value_t = 0.025)]
    pub alpha2: f64,
}

#[derive(Debug, Args)]
pub struct CiArgs {
    #[command(flatten)]
    pub model: Model,
    #[command(flatten)]
    pub region: Region,
    #[command(flatten)]
    pub search: Search,
    /// Entry (i, j) of A, one-based.
    #[arg(long)]
    pub coef: String,
    #[arg(long, default_value_t = 0.025)]
    pub alpha1: f64,
    #[arg(long, default_value_t = 0.025)]
    pub alpha2: f64,
    #[arg(long)]
    pub table: PathBuf,
    /// Simulate missing table nodes (scalar family only) instead of failing.
    #[arg(long)]
    pub build_table: bool,
    #[arg(long, default_value_t = qcvar::limitdist::DEFAULT_STEPS)]
    pub steps: usize,
    #[arg(long, default_value_t = qcvar::limitdist::DEFAULT_REPS)]
    pub reps: usize,
}

#[derive(Debug, Args)]
pub struct CritvalsArgs {
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value = "trend", value_parser = ["trend", "const", "none"])]
    pub det: String,
    /// Grid of c values, as `lo:hi:step` or a comma list; nodes are c * I_q.
    #[arg(long, allow_hyphen_values = true)]
    pub c_grid: String,
    #[arg(long, default_value_t = qcvar::limitdist::DEFAULT_STEPS)]
    pub steps: usize,
    #[arg(long, default_value_t = qcvar::limitdist::DEFAULT_REPS)]
    pub reps: usize,
    /// Table file, created or extended in place.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON list of k lag matrices, each a list of rows.
    #[arg(long)]
    pub coeffs: String,
    /// JSON innovation covariance; identity by default.
    #[arg(long)]
    pub sigma: Option<String>,
    /// Comma-separated intercept.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// Comma-separated trend slope.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<String>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub reps: u64,
}
