use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "carleman",
    version,
    about = "Numerical lab for Carleman ultraholomorphic classes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Regularity, indices, proximate order and series conditions of a sequence.
    Analyze,
    /// Quasianalyticity verdicts for a sector opening.
    Quasi,
    /// Moment table of a kernel.
    Moments,
    /// Flatness certificate for the flat function of a weight.
    Flat,
    /// Evaluate the truncated Laplace extension of a coefficient sequence.
    Extend,
    /// Certificate with a pass/fail exit code.
    Certify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Expansion,
    Flatness,
    Regularity,
    Roundtrip,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Sequence spec: gevrey:<a>, gevrey-scaled:<A>:<a>, alphabeta:<a>:<b>, qpower:<q>, file:<path>.
    #[arg(long, global = true)]
    pub seq: Option<String>,
    /// Weight spec: gevrey:<k>, powz:<k>, fromM, expr:<e>[@gamma], file:<path>.
    #[arg(long, global = true)]
    pub weight: Option<String>,
    /// Kernel spec: ev, ev:<k> or classical:<k>.
    #[arg(long, global = true)]
    pub kernel: Option<String>,
    /// Prefix length N.
    #[arg(long, global = true)]
    pub prefix: Option<usize>,
    /// Sector opening in units of pi.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Number of moments, or the largest N certified.
    #[arg(long, global = true)]
    pub count: Option<usize>,
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol: f64,
    /// Subsector as <alpha>:<r0>.
    #[arg(long, global = true)]
    pub subsector: Option<String>,
    /// Coefficient file {"coeffs_re": [...], "coeffs_im": [...], "A": 1.0}.
    #[arg(long, global = true)]
    pub coeffs: Option<PathBuf>,
    /// Evaluation points: comma-separated r or r@theta.
    #[arg(long, global = true)]
    pub eval: Option<String>,
    /// What `certify` checks.
    #[arg(long, global = true, value_enum, default_value_t = Target::Expansion)]
    pub target: Target,
    /// JSON report path (stdout if omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// CSV grid path.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Recorded for reproducibility; all default grids are deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

/// Everything needed to reproduce a report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(flatten)]
    pub common: Common,
}
