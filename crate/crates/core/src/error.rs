use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("{name} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state exceeded the divergence bound at step {step}")]
    Diverged { step: usize },

    #[error("recorded signal too short: need {needed} steps, have {available}")]
    LengthMismatch { needed: usize, available: usize },

    #[error("Lyapunov running averages did not settle (spread {spread:e} > band {band:e})")]
    NonConverged { spread: f64, band: f64 },

    #[error("keystream exhausted: need {needed} bits, have {available}")]
    KeystreamExhausted { needed: usize, available: usize },

    #[error("every sample fell under the denominator guard")]
    AllSamplesGuarded,

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}
