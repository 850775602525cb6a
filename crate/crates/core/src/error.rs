use thiserror::Error;

#[derive(Debug, Error)]
pub enum QfamesError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported lattice size: {0}")]
    UnsupportedSize(String),

    #[error("dimension {dim} too large for {mode} (limit {limit})")]
    TooLarge {
        dim: usize,
        limit: usize,
        mode: &'static str,
    },

    #[error("backend mismatch: {0}")]
    BackendMismatch(String),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("state annihilated by imaginary-time evolution (norm {0:e})")]
    DegenerateOverlap(f64),

    #[error("amplitude {0} exceeds 1 in magnitude")]
    InvalidAmplitude(f64),

    #[error("observable must be unitary for shot sampling")]
    NonUnitaryObservable,

    #[error("signal magnitude {value:e} vanishes at t = {t}; phase reconstruction undefined")]
    ZeroCrossing { t: f64, value: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no construction possible: {0}")]
    Refused(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T, E = QfamesError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> QfamesError {
    QfamesError::InvalidArgument(msg.into())
}

pub(crate) fn mismatch(msg: impl Into<String>) -> QfamesError {
    QfamesError::DimensionMismatch(msg.into())
}
