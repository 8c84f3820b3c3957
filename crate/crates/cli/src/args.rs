use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "l1fit", version, about = "Sparse L1 best-fit lines through the origin")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Worker threads for the parallel parts (0 = all cores).
    #[arg(long, default_value_t = 0, global = true)]
    pub threads: usize,
    /// Coordinates with magnitude at most this count as zero in L0 counts.
    #[arg(long, default_value_t = 1e-12, global = true)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BreakpointChoice {
    /// Breakpoints of the merged solution path.
    Merged,
    /// Union of the breakpoints of every preserved coordinate.
    Union,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the best line at one penalty.
    Fit {
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
    },
    /// Compute the full solution path over the penalty.
    Path {
        input: PathBuf,
        /// Also emit the objective lines of every preserved coordinate.
        #[arg(long)]
        per_coordinate: bool,
    },
    /// Run the contamination study on synthetic data.
    Simulate(SimulateArgs),
    /// Check every one-coordinate solution against a dual certificate.
    Certify {
        input: PathBuf,
        /// Penalty to certify; repeat for several.
        #[arg(long = "lambda", required = true, allow_hyphen_values = true)]
        lambdas: Vec<f64>,
        /// Perturb each certificate before checking it.
        #[arg(long, hide = true)]
        corrupt: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    /// Contaminated points.
    #[arg(long, default_value_t = 0)]
    pub nc: usize,
    /// Contaminated dimensions.
    #[arg(long, default_value_t = 0)]
    pub mc: usize,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_scale: f64,
    #[arg(long, default_value_t = 50.0)]
    pub outlier_scale: f64,
    #[arg(long, value_enum, default_value_t = BreakpointChoice::Merged)]
    pub breakpoints: BreakpointChoice,
}
