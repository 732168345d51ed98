use thiserror::Error;

/// Errors raised by the geometry engine.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: found {found}, expected one of [{}]", expected.join(", "))]
    Parse {
        line: usize,
        column: usize,
        found: String,
        expected: Vec<String>,
    },
    #[error("unknown identifier `{name}` at line {line}, column {column}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("domain fault: {0}")]
    DomainFault(String),
    #[error("metric is not positive definite at {point:?}")]
    SingularMetric { point: Vec<f64> },
    #[error("left the chart domain at t = {t} (last interior point {last_point:?})")]
    DomainExit {
        t: f64,
        last_point: Vec<f64>,
        last_velocity: Vec<f64>,
    },
    #[error("step size underflow at t = {t}")]
    StepFault { t: f64 },
    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),
    #[error("bad parameter: {0}")]
    BadParam(String),
    #[error("degenerate plane: vectors are nearly collinear")]
    DegeneratePlane,
    #[error("operation requires dimension >= {required}, got {got}")]
    BadDimension { required: usize, got: usize },
    #[error("no convergence after {iterations} iterations (best residual {best_residual:e})")]
    NoConvergence {
        iterations: usize,
        best_residual: f64,
    },
    #[error("conjugate point present at t = {0}")]
    ConjugatePresent(f64),
    #[error("no conjugate point found on the interval")]
    ConjugateNotFound,
    #[error("comparison hypothesis violated: {0}")]
    InputOrderViolated(String),
    #[error("bad profile: {0}")]
    BadProfile(String),
    #[error("barrier at u = {0} is a critical parallel; the angular change diverges")]
    BarrierNotTransversal(f64),
    #[error("i/o: {0}")]
    Io(String),
    #[error("invalid definition file: {0}")]
    Format(String),
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "ParseError",
            Error::UnknownIdentifier { .. } => "UnknownIdentifier",
            Error::DomainFault(_) => "DomainFault",
            Error::SingularMetric { .. } => "SingularMetric",
            Error::DomainExit { .. } => "DomainExit",
            Error::StepFault { .. } => "StepFault",
            Error::UnknownBuiltin(_) => "UnknownBuiltin",
            Error::BadParam(_) => "BadParam",
            Error::DegeneratePlane => "DegeneratePlane",
            Error::BadDimension { .. } => "BadDimension",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::ConjugatePresent(_) => "ConjugatePresent",
            Error::ConjugateNotFound => "ConjugateNotFound",
            Error::InputOrderViolated(_) => "InputOrderViolated",
            Error::BadProfile(_) => "BadProfile",
            Error::BarrierNotTransversal(_) => "BarrierNotTransversal",
            Error::Io(_) => "Io",
            Error::Format(_) => "Format",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
