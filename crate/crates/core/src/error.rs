use thiserror::Error;

/// Errors raised by the solver, the audits, and the studies.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Array lengths or other shape information do not fit the grid.
    #[error("structural error: {0}")]
    Structural(String),

    /// NaN or infinite value in an input field.
    #[error("non-finite value in `{field}` at index {index}")]
    NonFinite { field: &'static str, index: usize },

    /// A parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A Jacobian or diffusion coefficient that must be positive is not.
    #[error("degenerate Jacobian: {0}")]
    DegenerateJacobian(String),

    /// The initial density vanishes identically.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// The flow map lost monotonicity.
    #[error("degenerate flow map: {0}")]
    DegenerateMap(String),

    /// An Euler query point lies outside the deformed domain.
    #[error("query point {x} outside [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    /// Malformed or inconsistent configuration document.
    #[error("config error: {0}")]
    Config(String),

    /// File system failure, with the offending path.
    #[error("{path}: {message}")]
    Io { path: String, message: String },

    /// Breakdown of a linear solve.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The adaptive step would drop below the configured minimum.
    #[error("time step {dt:e} fell below dt_min {dt_min:e} at t = {t}: {reason}")]
    StepAbort {
        t: f64,
        dt: f64,
        dt_min: f64,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Structural(format!(
            "`{what}` has length {got}, expected {expected}"
        )));
    }
    Ok(())
}

pub(crate) fn check_finite(field: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite { field, index }),
        None => Ok(()),
    }
}
