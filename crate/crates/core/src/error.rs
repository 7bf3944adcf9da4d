use thiserror::Error;

/// Errors surfaced by the simulator and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("failed to parse config: {0}")]
    ConfigParse(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("quadrature did not reach tolerance {requested:e} (achieved {achieved:e})")]
    Quadrature { requested: f64, achieved: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user configuration, as opposed to runtime failures.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::ConfigParse(_))
    }
}
