use thiserror::Error;

/// Unified error type for the whole crate.
///
/// Numeric routines return structured variants so callers (CLI, sweep driver)
/// can distinguish bad input (exit code 1) from runtime failures (exit code 2).
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Kummer function requested at a pole of the parameter c.
    #[error("kummer pole: c = {c} is a non-positive integer")]
    Pole { c: f64 },

    /// Intermediate value exceeds the representable floating-point range.
    #[error("overflow: {0}")]
    Overflow(String),

    /// Initial-data profile incompatible with the configured model.
    #[error("unsupported profile: {0}")]
    ProfileUnsupported(String),

    /// Weight construction could not satisfy its invariants on this grid.
    #[error("weight construction failed: {0}")]
    ConstructionFailure(String),

    /// Solution amplitude exceeded the blow-up guard.
    #[error("blow-up detected at t = {t}: max |u| = {max_abs:e}")]
    Blowup { t: f64, max_abs: f64 },

    /// Invalid run or scheme configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Quadrature tail is not decaying; the integral is unreliable.
    #[error("divergence warning: {0}")]
    DivergenceWarning(String),

    /// Test function violates a compact-support precondition.
    #[error("support error: {0}")]
    Support(String),

    /// Fit window contains no records.
    #[error("window error: {0}")]
    Window(String),

    /// Flat-rate bound requested outside its admissible weight range.
    #[error("rate-range error: lambda = {lambda} is outside [0, {limit})")]
    CaseIRange { lambda: f64, limit: f64 },

    /// Config text could not be parsed; message lists every violation.
    #[error("parse error:\n{0}")]
    Parse(String),

    /// Config parsed but failed validation; message lists every violation.
    #[error("validation error:\n{0}")]
    Validation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
