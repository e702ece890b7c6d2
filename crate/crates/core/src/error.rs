use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("non-finite {quantity} passed to {context}")]
    NonFinite {
        quantity: &'static str,
        context: &'static str,
    },

    #[error("integration blew up at step {step}: {quantity} became {value}")]
    IntegrationBlowup {
        step: usize,
        quantity: &'static str,
        value: f64,
    },

    #[error("steady-state solve did not converge after {iterations} iterations")]
    SteadyState { iterations: usize },

    #[error("trajectory alignment: {0}")]
    Alignment(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("visibility undefined: both intensities are zero")]
    UndefinedVisibility,
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
