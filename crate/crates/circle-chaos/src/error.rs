use thiserror::Error;

/// Every failure the library can report.
///
/// Each variant carries a stable kebab-case code (see [`Error::code`]) that the
/// command-line front end prints and maps onto exit statuses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("green-singularity: points coincide")]
    GreenSingularity,
    #[error("point-outside-domain: ({x}, {y}) is not strictly interior")]
    PointOutsideDomain { x: f64, y: f64 },
    #[error("empty-circle: circle of radius {radius} about ({x}, {y}) misses the domain")]
    EmptyCircle { x: f64, y: f64, radius: f64 },
    #[error("no-intersection: line does not meet the closed domain")]
    NoIntersection,
    #[error("covariance-not-psd: factorization failed with jitter up to {jitter:e}")]
    CovarianceNotPsd { jitter: f64 },
    #[error("calibration-failed: {0}")]
    CalibrationFailed(String),
    #[error("parameter-out-of-range: {0}")]
    ParameterOutOfRange(String),
    #[error("ifs-too-deep: {words} words exceed the budget of {budget}")]
    IfsTooDeep { words: f64, budget: f64 },
    #[error("fit-failed: {0}")]
    FitFailed(String),
    #[error("node-mismatch: {0}")]
    NodeMismatch(String),
    #[error("ladder-too-large: {nodes} nodes exceed the exact-backend budget of {budget}")]
    LadderTooLarge { nodes: usize, budget: usize },
    #[error("invalid-p: p = {0} must be at least 1")]
    InvalidP(f64),
    #[error("gamma-zero: gamma must be positive")]
    GammaZero,
    #[error("no-root: {0}")]
    NoRoot(String),
    #[error("invalid-input: {0}")]
    InvalidInput(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("format: {0}")]
    Format(String),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::GreenSingularity => "green-singularity",
            Error::PointOutsideDomain { .. } => "point-outside-domain",
            Error::EmptyCircle { .. } => "empty-circle",
            Error::NoIntersection => "no-intersection",
            Error::CovarianceNotPsd { .. } => "covariance-not-psd",
            Error::CalibrationFailed(_) => "calibration-failed",
            Error::ParameterOutOfRange(_) => "parameter-out-of-range",
            Error::IfsTooDeep { .. } => "ifs-too-deep",
            Error::FitFailed(_) => "fit-failed",
            Error::NodeMismatch(_) => "node-mismatch",
            Error::LadderTooLarge { .. } => "ladder-too-large",
            Error::InvalidP(_) => "invalid-p",
            Error::GammaZero => "gamma-zero",
            Error::NoRoot(_) => "no-root",
            Error::InvalidInput(_) => "invalid-input",
            Error::Io(_) => "io",
            Error::Format(_) => "format",
        }
    }

    /// True for failures caused by a resource budget rather than bad input.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::LadderTooLarge { .. } | Error::IfsTooDeep { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
