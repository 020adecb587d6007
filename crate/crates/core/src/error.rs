use thiserror::Error;

/// Errors reported by the modeling and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violated a numeric precondition (sign, finiteness, range).
    #[error("domain error: {0}")]
    Domain(String),
    /// Fewer samples than a fit of the requested degree needs.
    #[error("insufficient samples: degree {degree} needs at least {needed}, got {got}")]
    InsufficientSamples {
        degree: usize,
        needed: usize,
        got: usize,
    },
    /// The least-squares system does not have full column rank.
    #[error("rank-deficient fit: {0}")]
    RankDeficient(String),
    /// An operation that needs at least one sample received none.
    #[error("empty sample set")]
    EmptySamples,
    /// Preset lookup failed.
    #[error("unknown preset `{name}`; valid presets: {valid}")]
    UnknownPreset { name: String, valid: &'static str },
    /// A search interval was empty, inverted, or non-finite.
    #[error("invalid range [{lo}, {hi}]: bounds must be finite with lo < hi")]
    InvalidRange { lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_non_negative(name: &str, value: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be >= 0, got {value}")))
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be > 0, got {value}")))
    }
}
