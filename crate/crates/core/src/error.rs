use crate::lpqp::SolverError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("operation requires a non-empty set")]
    EmptySet,
    #[error("safe set {index} of the islanding horizon is empty")]
    EmptySafeSet { index: usize },
    #[error("ill-posed scenario: {0}")]
    IllPosed(String),
    #[error(transparent)]
    Solver(#[from] SolverErrorKind),
    #[error("no admissible balanced input keeps the next state safe: {0}")]
    ShieldInfeasible(Box<ShieldDiagnostics>),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Wrapper so both solver failures and ad-hoc numeric failures share one variant.
#[derive(Debug, thiserror::Error)]
pub enum SolverErrorKind {
    #[error(transparent)]
    Program(#[from] SolverError),
    #[error("solver failure: {0}")]
    Other(String),
}

impl From<SolverError> for Error {
    fn from(e: SolverError) -> Self {
        Error::Solver(SolverErrorKind::Program(e))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Data(e.to_string())
    }
}

/// Context attached to an infeasible projection.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ShieldDiagnostics {
    pub net_load: f64,
    pub state: Vec<f64>,
    pub target_lower: Vec<f64>,
    pub target_upper: Vec<f64>,
}

impl std::fmt::Display for ShieldDiagnostics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "d={:.6}, x={:?}, target hull [{:?}, {:?}]",
            self.net_load, self.state, self.target_lower, self.target_upper
        )
    }
}

impl Error {
    pub fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(SolverErrorKind::Other(msg.into()))
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParams(_) | Error::Data(_) | Error::Io(_) | Error::Json(_) => 2,
            Error::EmptySafeSet { .. } | Error::IllPosed(_) | Error::ShieldInfeasible(_) | Error::EmptySet => 3,
            Error::Solver(_) => 4,
            Error::Dimension(_) => 2,
        }
    }

    /// Short machine-readable tag for wire error frames.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::EmptySet => "empty_set",
            Error::EmptySafeSet { .. } => "empty_safe_set",
            Error::IllPosed(_) => "ill_posed",
            Error::Solver(_) => "solver",
            Error::ShieldInfeasible(_) => "shield_infeasible",
            Error::InvalidParams(_) => "invalid_params",
            Error::Data(_) => "data",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
