use thiserror::Error;

/// Errors raised by the solvers and checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate exponent: p = 1 leaves theta undefined")]
    DegenerateExponent,
    #[error("sigma = -2m is excluded: no punctured super-solution exists for this weight")]
    CriticalWeight,
    #[error("out of model: p = {0} <= 1")]
    OutOfModel(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no singular solution: K = {0} <= 0")]
    NoSingularSolution(f64),
    #[error("divergent integral: {0}")]
    Divergence(String),
    #[error("grid too small: {0}")]
    GridTooSmall(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("non-convergence: {0}")]
    NonConvergence(String),
    #[error("insufficient blow-up: {0}")]
    InsufficientBlowup(String),
    #[error("internal consistency violated: {0}")]
    Consistency(String),
    #[error("check not applicable: {0}")]
    Inapplicable(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code: 1 for numerical failure, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence(_)
            | Error::InsufficientBlowup(_)
            | Error::Consistency(_)
            | Error::Divergence(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
