//! `gfix`: batch front end for G-metric axiom checks and Mann iteration.
//!
//! Exit status: 0 when every check passed, 1 when checks ran and found
//! violations or divergence, 2 on configuration errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;

#[derive(Debug, Parser)]
#[command(name = "gfix", version, about = "G-metric axiom checks and Mann iteration with rate-bound verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample the five G-metric axioms.
    CheckAxioms(CheckArgs),
    /// Sample the inequalities every G-metric inherits from its axioms.
    CheckDerived(CheckArgs),
    /// Sample the two-point convexity inequality of a space's structure.
    CheckConvexity(ConvexityArgs),
    /// Sample a contractive condition for a mapping.
    CheckCondition(ConditionCheckArgs),
    /// Run the Mann iteration and write the trace CSV.
    Iterate(IterateArgs),
    /// Tabulate the cumulative product bound for a condition and schedule.
    Bound(BoundArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat key = value file mirroring the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// PRNG seed; defaults to $GFIX_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path (report or CSV); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Catalog key: perimeter-<dim>, max-<dim> or sign-example.
    #[arg(long)]
    pub space: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Relative tolerance for <= checks.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Sampling box `low,high` applied to every coordinate.
    #[arg(long = "box", allow_hyphen_values = true)]
    pub bbox: Option<String>,
    /// Distinctness threshold for the strict axioms.
    #[arg(long)]
    pub min_sep: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub sample: SampleArgs,
}

#[derive(Debug, Args)]
pub struct ConvexityArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub sample: SampleArgs,
    /// `linear` (bundled) or `additive` (W = x + y, for negative controls).
    #[arg(long)]
    pub structure: Option<String>,
}

#[derive(Debug, Args)]
pub struct MappingArgs {
    /// affine | identity | constant | translation
    #[arg(long)]
    pub mapping: Option<String>,
    /// Affine factor k in T x = center + k (x - center).
    #[arg(long, allow_hyphen_values = true)]
    pub factor: Option<f64>,
    /// Affine or constant center, one value or one per coordinate.
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<String>,
    /// Translation offset.
    #[arg(long, allow_hyphen_values = true)]
    pub shift: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConditionArgs {
    /// four-term | four-term-alt | sum | max | three-term | k-sum
    #[arg(long)]
    pub condition: Option<String>,
    /// Coefficients, e.g. a=0.5,b=0.1
    #[arg(long)]
    pub coeff: Option<String>,
}

#[derive(Debug, Args)]
pub struct ConditionCheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub sample: SampleArgs,
    #[command(flatten)]
    pub mapping: MappingArgs,
    #[command(flatten)]
    pub condition: ConditionArgs,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// constant | harmonic | power | explicit
    #[arg(long)]
    pub schedule: Option<String>,
    /// Constant step weight, or a comma list for `explicit`.
    #[arg(long)]
    pub alpha: Option<String>,
    /// Exponent p for alpha_n = 1/(n+1)^p.
    #[arg(long)]
    pub power: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IterateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Catalog key of a space with a convex structure.
    #[arg(long)]
    pub space: Option<String>,
    #[command(flatten)]
    pub mapping: MappingArgs,
    #[command(flatten)]
    pub condition: ConditionArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Initial point, one value or one per coordinate.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub residual_tol: Option<f64>,
    #[arg(long)]
    pub error_tol: Option<f64>,
    /// Absolute tolerance on the bound slack.
    #[arg(long)]
    pub bound_tol: Option<f64>,
    /// Summary path; stderr when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub condition: ConditionArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Number of steps n; rows B_0..B_n are written.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Summary path; stderr when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::CheckAxioms(a) => commands::check_axioms(a, "check-axioms"),
        Command::CheckDerived(a) => commands::check_axioms(a, "check-derived"),
        Command::CheckConvexity(a) => commands::check_convexity(a),
        Command::CheckCondition(a) => commands::check_condition(a),
        Command::Iterate(a) => commands::iterate(a),
        Command::Bound(a) => commands::bound(a),
    };
    match result {
        Ok(passed) => ExitCode::from(if passed { 0 } else { 1 }),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
