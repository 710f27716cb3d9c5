use thiserror::Error;

/// Errors raised by the geometric and numerical routines.
///
/// Variants map onto the CLI exit codes: input problems exit with 1,
/// tripped numeric guards with 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("radius {r} outside model domain ({lo}, {hi})")]
    Domain { r: f64, lo: f64, hi: f64 },

    #[error("tortoise value {value} not attained inside the model domain")]
    TortoiseRange { value: f64 },

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error(
        "inconsistent derivative for custom model at r={r}: {which} analytic {analytic}, finite difference {numeric}"
    )]
    InconsistentDerivative { which: &'static str, r: f64, analytic: f64, numeric: f64 },

    #[error("field not positive at {count} grid nodes (first node {first})")]
    NotPositive { count: usize, first: usize },

    #[error("mean curvature vector not spacelike at {count} nodes (first node {first})")]
    NotSpacelike { count: usize, first: usize },

    #[error("operation requires a space-form model, got {0}")]
    NotSpaceForm(String),

    #[error("Killing field {which} not available for model {model}")]
    KillingMismatch { which: String, model: String },

    #[error("profile not a boosted sphere: a={a} <= |b|={b}")]
    NotBoostedSphere { a: f64, b: f64 },

    #[error("aliasing guard: grid bandlimit {grid} below required {required}")]
    Aliasing { grid: usize, required: usize },

    #[error("bandlimit {0} exceeds the memory guard")]
    BandlimitTooLarge(usize),

    #[error("degenerate Mobius map (ad - bc = 0)")]
    DegenerateMap,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("input is not a solution: max residual {0:e}")]
    NotASolution(f64),

    #[error("singular Jacobian beyond gauge kernel; smallest singular values {0:?}")]
    SingularJacobian(Vec<f64>),

    #[error("Newton iterate left the admissible set after step halving")]
    StepFailure,

    #[error("finite-difference step rejected: Richardson disagreement {0:e}")]
    StepControl(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    /// Name of the numeric guard, or `None` for input errors.
    pub fn guard_name(&self) -> Option<&'static str> {
        match self {
            Error::NotPositive { .. } => Some("positivity"),
            Error::NotSpacelike { .. } => Some("spacelike-H"),
            Error::Aliasing { .. } => Some("aliasing"),
            Error::BandlimitTooLarge(_) => Some("memory"),
            Error::NotASolution(_) => Some("solution-residual"),
            Error::SingularJacobian(_) => Some("jacobian-rank"),
            Error::StepFailure => Some("step-halving"),
            Error::StepControl(_) => Some("fd-step"),
            Error::Numerical(_) => Some("numerical"),
            Error::Domain { .. } | Error::TortoiseRange { .. } => Some("domain"),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
