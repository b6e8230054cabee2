use thiserror::Error;

/// Errors raised by the library.
///
/// The variants are grouped by how a caller is expected to react: bad input,
/// numerical accuracy problems (a truncation or window is too small), and
/// structural failures of a check.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coefficient sequence is not in the ML class: {0}")]
    NotInClass(String),

    #[error("accuracy failure: {0}")]
    Accuracy(String),

    #[error("integration window too small: {reason} (suggested window {suggested})")]
    WindowTooSmall { reason: String, suggested: f64 },

    #[error("degree {degree} exceeds the configured maximum {max}")]
    DegreeLimit { degree: usize, max: usize },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("monomial {0} lies in an excluded direction (zero Taylor coefficient)")]
    ExcludedDirection(String),

    #[error("inadmissible level gap: p - q = {gap} but the summability exponent is d = {d}")]
    InadmissibleGap { gap: i64, d: u32 },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures that are cured by a larger truncation or window
    /// rather than by different input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Accuracy(_) | Error::WindowTooSmall { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
