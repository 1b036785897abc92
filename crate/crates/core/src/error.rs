use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the library.
///
/// Validation failures carry a message naming the violated invariant so
/// callers (and the CLI) can report it verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("observable is not Hermitian (max deviation {0:.3e})")]
    NonHermitian(f64),

    #[error("post-selection vector is not normalized (norm^2 = {0})")]
    NonUnitVector(f64),

    #[error("both weak-value magnitudes vanish; the pair must be routed to the diagonal-intensity estimate")]
    BothWeakValuesZero,

    #[error("weak-value magnitude product {0} exceeds 1 beyond tolerance")]
    ProductExceedsOne(f64),

    #[error("inconsistent weak-value pair: {0}")]
    InconsistentPair(String),

    #[error("invalid pointer grid: {0}")]
    InvalidGrid(String),

    #[error("coupling shift {shift} does not fit on a grid of half-width {extent}")]
    ShiftOffGrid { shift: f64, extent: f64 },

    #[error("zero-intensity image: no signal on the pointer")]
    ZeroIntensity,

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroIntensity | Error::InsufficientSamples { .. } | Error::BothWeakValuesZero
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
