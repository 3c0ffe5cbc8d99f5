use alloc::string::String;

/// Errors raised by the detection pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value violates an operation precondition.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// A value lies outside the domain where a law or table is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// The eigen-spectrum has a zero where the statistic divides by it.
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),
    /// The eigensolver did not converge.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// A computed quantity broke a structural invariant (e.g. PSD).
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    /// The detector has no closed-form threshold.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A required table or calibration entry is missing.
    #[error("configuration error: {0}")]
    Configuration(String),
    /// Every trial of a campaign was degenerate for some detector.
    #[error("campaign error: {0}")]
    Campaign(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
