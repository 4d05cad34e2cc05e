use thiserror::Error;

/// Errors raised by the geometry, curvature and optimisation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QigError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pure-reduction stratum: det(rho_A) = {delta:e}")]
    PureReduction { delta: f64 },

    #[error("boundary stratum: use support-projected pseudoinverse (det = {delta:e} < {tau:e})")]
    BoundaryStratum { delta: f64, tau: f64 },

    #[error("Bloch radius {0} is outside the open unit ball")]
    BlochBoundary(f64),

    #[error("oracle requires full rank (min eigenvalue {0:e})")]
    RankDeficient(f64),

    #[error("nonpositive active eigenvalue {0:e}")]
    NonpositiveActive(f64),

    #[error("gap guard violated: gap {gap:e} < {min:e}")]
    GapGuard { gap: f64, min: f64 },

    #[error("eigenvalue straddles the spectral threshold")]
    IrregularSplit,

    #[error("Brioschi singularity: normalised determinant {value:e} < {min:e}")]
    Brioschi { value: f64, min: f64 },

    #[error("no 2-plane: active rank {0} < 2")]
    NoTwoPlane(usize),

    #[error("gauge undefined: C critical in this plane")]
    GaugeUndefined,

    #[error("frozen chart lost transversality (conditioning {0:.3})")]
    ChartDegenerate(f64),

    #[error("no stable step among candidates")]
    NoStableStep,

    #[error("pole: KSKD formula undefined at C = {0}")]
    KskdPole(f64),

    #[error("parameter count mismatch: expected {expected}, got {got}")]
    ParamCount { expected: usize, got: usize },

    #[error("state not normalised: |norm - 1| = {0:e}")]
    NotNormalized(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, QigError>;

impl From<std::io::Error> for QigError {
    fn from(e: std::io::Error) -> Self {
        QigError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for QigError {
    fn from(e: serde_json::Error) -> Self {
        QigError::Config(e.to_string())
    }
}

impl From<csv::Error> for QigError {
    fn from(e: csv::Error) -> Self {
        QigError::Io(e.to_string())
    }
}
