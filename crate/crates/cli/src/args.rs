use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "eikon",
    version,
    about = "Minimum-time eikonal solvers and checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fast marching on one benchmark; writes the value field and a report.
    Solve(SolveArgs),
    /// Constrained fast marching, compared with the unconstrained solve.
    SolveConstrained(SolveArgs),
    /// Interior errors over a sequence of steps and the fitted order.
    Converge(ConvergeArgs),
    /// Heap operations against grid size.
    Complexity(ComplexityArgs),
    /// Second-difference probe of a solved field.
    Semiconcavity(SemiconcavityArgs),
    /// Transition-law invariants and greedy Monte-Carlo rollouts.
    MdpCheck(MdpArgs),
}

#[derive(Args, Debug)]
pub struct Common {
    /// Benchmark name; see the registry in the error message for choices.
    #[arg(long, default_value = "unit-disk")]
    pub benchmark: String,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Per-orthant angle search; by default nested for isotropic speeds,
    /// multistart otherwise.
    #[arg(long, value_enum)]
    pub minimizer: Option<MinimizerArg>,
    /// Final bracket width of the angle search, in radians.
    #[arg(long, default_value_t = 1e-10)]
    pub angle_tol: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MinimizerArg {
    Nested,
    Multistart,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Mesh step, as a decimal or a fraction such as 1/40.
    #[arg(long, value_parser = parse_real)]
    pub h: f64,
}

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated, strictly decreasing steps.
    #[arg(long, value_delimiter = ',', value_parser = parse_real,
          default_value = "1/20,1/40,1/80,1/160")]
    pub h_list: Vec<f64>,
    /// Interior margin; defaults to 10 times the coarsest step.
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long, default_value_t = 0.8)]
    pub min_order: f64,
}

#[derive(Args, Debug)]
pub struct ComplexityArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated nodes per axis.
    #[arg(long, value_delimiter = ',', default_value = "65,129,257")]
    pub sizes: Vec<usize>,
}

#[derive(Args, Debug)]
pub struct SemiconcavityArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_parser = parse_real, default_value = "1/80")]
    pub h: f64,
    /// Comma-separated offsets in units of h.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    pub z_steps: Vec<usize>,
    /// Probe times instead of Kruzkov values.
    #[arg(long)]
    pub time_level: bool,
    /// Fail with exit 3 when max/min of the per-offset maxima exceeds this.
    #[arg(long)]
    pub max_spread: Option<f64>,
}

#[derive(Args, Debug)]
pub struct MdpArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_parser = parse_real, default_value = "1/20")]
    pub h: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Rollouts per probe.
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
}

/// A decimal number or a fraction `a/b`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    let v = match s.split_once('/') {
        Some((a, b)) => parse(a)? / parse(b)?,
        None => parse(s)?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not a finite number"))
    }
}
