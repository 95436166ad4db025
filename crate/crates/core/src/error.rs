use thiserror::Error;

/// Errors raised while building grids and problems, configuring solvers or
/// running the verification harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported dimension {dim}: supported dimensions are 1..={max}")]
    UnsupportedDimension { dim: usize, max: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("{what} = {value} is outside the domain of {op}")]
    Domain {
        op: &'static str,
        what: &'static str,
        value: f64,
    },

    #[error("unknown benchmark `{name}`; registered benchmarks: {}", available.join(", "))]
    UnknownBenchmark {
        name: String,
        available: Vec<String>,
    },

    #[error("mesh step h = {h} violates h < min(1/f_max, f_min) = {bound}")]
    StepTooLarge { h: f64, bound: f64 },

    #[error("the target set contains no grid node")]
    EmptyTarget,

    #[error("invalid setup: {0}")]
    Setup(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("direction rejected at node {node}: barycentric weights are not all in [0, 1]")]
    InfeasibleDirection { node: usize },

    #[error("benchmark `{0}` has no analytic solution")]
    NoAnalyticSolution(String),

    #[error("the evaluation region is empty")]
    EmptyRegion,

    #[error("oracle budget exceeded: {0}")]
    OracleBudget(String),

    #[error("solve failed at h = {h}: {source}")]
    SweepFailed { h: f64, source: Box<Error> },
}

impl Error {
    /// True for errors caused by bad configuration rather than by a run.
    pub fn is_configuration(&self) -> bool {
        match self {
            Error::SweepFailed { source, .. } => source.is_configuration(),
            Error::InfeasibleDirection { .. } | Error::OracleBudget(_) => false,
            _ => true,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
