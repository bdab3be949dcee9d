use alloc::string::String;

/// Errors raised by model construction and the numerical operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("model validation failed: {0}")]
    Validation(String),

    #[error("non-finite value of {what} at x = {x}")]
    NonFinite { what: &'static str, x: f64 },

    #[error("{what} = {value} lies outside the admissible range ({lo}, {hi})")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("conjugate point of x = {x} escapes the domain on the {side} side")]
    ConjugateEscapes { x: f64, side: &'static str },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("state left the center region at t = {t}")]
    LeftCenter { t: f64 },
}

impl Error {
    /// Numerical failures (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RootFinding(_)
                | Error::Quadrature(_)
                | Error::Integration { .. }
                | Error::IllConditioned(_)
                | Error::LeftCenter { .. }
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
