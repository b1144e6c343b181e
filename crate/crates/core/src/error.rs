use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The variants are coarse on purpose: callers (the CLI in particular) map
/// them onto exit codes, so each one names a failure class rather than a site.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("degenerate geometry: {0}")]
    Geometry(String),
    #[error("invalid scaffold: {0}")]
    Spec(String),
    #[error("element not in feature vocabulary: {0}")]
    Vocabulary(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error("incompatible input: {0}")]
    Compatibility(String),
    #[error("data integrity violated: {0}")]
    Integrity(String),
    #[error("dataset generation failed: {0}")]
    Generation(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(format!($($arg)*)))
    };
}
pub(crate) use bail;
