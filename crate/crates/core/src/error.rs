use thiserror::Error;

/// Every failure the library can report.
///
/// Variants fall into three families that the command-line front end maps
/// onto distinct exit codes: input validation, numerical failure and
/// statistical gate failure (see [`ErrorClass`]).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SleError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point {point} lies inside the hull (absorbed at step {step})")]
    InsideHull { point: String, step: usize },

    #[error("numerical blowup at step {step}")]
    NumericalBlowup { step: usize },

    #[error("flow terminated at time {time}")]
    FlowTerminated { time: f64 },

    #[error("curve is not unzippable at point {index}: {reason}")]
    NotUnzippable { index: usize, reason: String },

    #[error("curve is not anchored at the origin (|z0| = {distance:e})")]
    BadAnchor { distance: f64 },

    #[error("normalized trace not converged: truncation estimate {estimate:e} exceeds {tolerance:e}")]
    NotConverged { estimate: f64, tolerance: f64 },

    #[error("no stationary law in this regime (delta = {delta})")]
    NoStationaryLaw { delta: f64 },

    #[error("series truncation fails at t = {t}: increase n_max to at least {required}")]
    IncreaseOrder { t: f64, required: usize },

    #[error("{dropped} of {replicas} replicas failed, more than the tolerated fifth")]
    TooManyDrops { dropped: usize, replicas: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("statistical gate failed: {0}")]
    StatisticalGate(String),

    #[error("i/o error: {0}")]
    Io(String),
}

/// Coarse classification used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Statistical,
}

impl SleError {
    pub fn class(&self) -> ErrorClass {
        match self {
            SleError::InvalidInput(_)
            | SleError::BadAnchor { .. }
            | SleError::NoStationaryLaw { .. }
            | SleError::Unsupported(_)
            | SleError::Io(_) => ErrorClass::Validation,
            SleError::InsideHull { .. }
            | SleError::NumericalBlowup { .. }
            | SleError::FlowTerminated { .. }
            | SleError::NotUnzippable { .. }
            | SleError::NotConverged { .. }
            | SleError::IncreaseOrder { .. }
            | SleError::TooManyDrops { .. } => ErrorClass::Numerical,
            SleError::StatisticalGate(_) => ErrorClass::Statistical,
        }
    }

    /// Short machine-readable tag, used in the JSON error payload.
    pub fn tag(&self) -> &'static str {
        match self {
            SleError::InvalidInput(_) => "invalid-input",
            SleError::InsideHull { .. } => "inside-hull",
            SleError::NumericalBlowup { .. } => "numerical-blowup",
            SleError::FlowTerminated { .. } => "flow-terminated",
            SleError::NotUnzippable { .. } => "not-unzippable",
            SleError::BadAnchor { .. } => "bad-anchor",
            SleError::NotConverged { .. } => "not-converged",
            SleError::NoStationaryLaw { .. } => "no-stationary-law",
            SleError::IncreaseOrder { .. } => "increase-n-max",
            SleError::TooManyDrops { .. } => "too-many-drops",
            SleError::Unsupported(_) => "unsupported",
            SleError::StatisticalGate(_) => "statistical-gate",
            SleError::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for SleError {
    fn from(e: std::io::Error) -> Self {
        SleError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SleError>;
