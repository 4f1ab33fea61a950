use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use invopt::instances::{LcpCase, NormChoice};

#[derive(Debug, Parser)]
#[command(name = "invopt", version, about = "Minimal data perturbations that make a given point a KKT point or LCP solution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the inverse problem for an instance file and write the result.
    Solve(SolveArgs),
    /// Check a point against the data (or the perturbed data of a result file).
    Verify(VerifyArgs),
    /// Write a seeded random instance.
    Generate(GenerateArgs),
    /// Run the scaling suite and print iteration counts.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    L1,
    L2,
}

impl From<NormArg> for NormChoice {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::L1 => NormChoice::L1,
            NormArg::L2 => NormChoice::L2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseArg {
    A,
    B,
    C,
}

impl From<CaseArg> for LcpCase {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::A => LcpCase::A,
            CaseArg::B => LcpCase::B,
            CaseArg::C => LcpCase::C,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Qp,
    Lcp,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Gap and residual tolerance of the interior-point solver.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap of the interior-point solver.
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Result file; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Overrides the `norm` field of the input.
    #[arg(long, value_enum)]
    pub norm: Option<NormArg>,
    /// LCP variant; inferred from which of x0/s0 are present when absent.
    #[arg(long = "case", value_enum)]
    pub case: Option<CaseArg>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Box radius R for case (c).
    #[arg(long = "box", default_value_t = invopt::case_c::DEFAULT_BOX)]
    pub box_r: f64,
    /// Local-search restarts for case (c).
    #[arg(long, default_value_t = invopt::case_c::DEFAULT_RESTARTS)]
    pub restarts: usize,
    /// Seed for the case (c) restarts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Verification tolerance.
    #[arg(long, default_value_t = crate::commands::VERIFY_TOL)]
    pub tol: f64,
    #[arg(long = "case", value_enum)]
    pub case: Option<CaseArg>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long = "type", value_enum, default_value = "qp")]
    pub kind: KindArg,
    #[arg(long)]
    pub n: usize,
    /// Equality rows (QP only).
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Which candidate data to attach (LCP only).
    #[arg(long = "case", value_enum, default_value = "a")]
    pub case: CaseArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub norm: Option<NormArg>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Run a single size instead of 5, 10, 20, 30.
    #[arg(long)]
    pub n: Option<usize>,
    /// First of three consecutive seeds.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV file; the text table always goes to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}
