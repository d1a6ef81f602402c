use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by fitting, prediction and bound evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Weighted regression called with no observations.
    EmptyRegression,
    /// A fit was requested on zero rows.
    EmptyData,
    /// The dataset has no feature columns.
    NoFeatures,
    /// Two inputs that must agree in length do not.
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    /// A feature vector has the wrong dimension for the model.
    DimensionMismatch { expected: usize, actual: usize },
    /// Sample weights are negative, non-finite, or sum to zero.
    InvalidWeights,
    /// A binary target is not in {-1, +1}, or a class index is out of range.
    InvalidLabel,
    /// Fewer classes than the operation requires.
    TooFewClasses { required: usize, found: usize },
    /// A hyperparameter or bound input is outside its domain.
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyRegression => write!(f, "empty regression"),
            Error::EmptyData => write!(f, "empty data"),
            Error::NoFeatures => write!(f, "dataset has no feature columns"),
            Error::LengthMismatch {
                what,
                expected,
                actual,
            } => write!(
                f,
                "length mismatch for {what}: expected {expected}, got {actual}"
            ),
            Error::DimensionMismatch { expected, actual } => {
                write!(
                    f,
                    "dimension mismatch: model expects {expected} features, got {actual}"
                )
            }
            Error::InvalidWeights => {
                write!(
                    f,
                    "sample weights must be finite, nonnegative and sum to a positive value"
                )
            }
            Error::InvalidLabel => write!(f, "invalid label"),
            Error::TooFewClasses { required, found } => {
                write!(f, "at least {required} classes required, found {found}")
            }
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
        }
    }
}

impl core::error::Error for Error {}
