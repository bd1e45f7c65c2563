use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: `{field}` = {value} ({reason})")]
    Config {
        field: String,
        value: String,
        reason: String,
    },

    #[error("position {x:e} m outside device [0, {length:e}] m")]
    Domain { x: f64, length: f64 },

    #[error("invalid state: {0}")]
    State(String),

    #[error("circuit solver did not converge after {iterations} iterations (last KVL residual {residual:e} V)")]
    Solver { iterations: usize, residual: f64 },

    #[error("at step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, value: impl ToString, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            value: value.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }

    /// Short machine-readable category, used for process exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config { .. } => "config",
            Error::Domain { .. } => "domain",
            Error::State(_) => "state",
            Error::Solver { .. } => "solver",
            Error::Step { source, .. } => source.category(),
            Error::Internal(_) => "internal",
            Error::Io(_) => "io",
        }
    }
}
