use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid term set: {0}")]
    InvalidScale(String),

    #[error("term index {index} out of range for scale h_0..h_{max}")]
    TermOutOfRange { index: usize, max: usize },

    #[error("non-finite opinion value {0}")]
    NonFinite(f64),

    #[error("invalid interval [{lo}, {hi}]: need 0 <= lo <= hi <= 1")]
    InvalidInterval { lo: f64, hi: f64 },

    /// Scenario validation failure, addressed by the offending field.
    #[error("{field}: {message}")]
    InvalidScenario { field: String, message: String },

    #[error("scenario file: {0}")]
    Parse(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),

    #[error("TSK system has {expected} inputs, got {got}")]
    InputDimension { expected: usize, got: usize },

    #[error("degenerate input: no rule fires (total firing strength {0})")]
    DegenerateInput(f64),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn scenario(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidScenario {
            field: field.into(),
            message: message.into(),
        }
    }
}
