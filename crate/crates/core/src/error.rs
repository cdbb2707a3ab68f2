use std::path::PathBuf;

/// Errors produced anywhere in the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The dense-exponential path refuses spaces above the size guard.
    #[error("dense propagator refused for total_dim {total_dim} (guard {guard}); use the ODE path")]
    DenseGuard { total_dim: usize, guard: usize },

    #[error("integration failed at t = {time}: {invariant} violated ({detail})")]
    IntegrationFailure {
        invariant: &'static str,
        time: f64,
        detail: String,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("scenario {scenario}: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures that come from the physics/numerics rather than from
    /// malformed input. The CLI maps these to exit status 1.
    pub fn is_runtime(&self) -> bool {
        match self {
            Error::IntegrationFailure { .. } | Error::Fit(_) | Error::Io { .. } => true,
            Error::Scenario { source, .. } => source.is_runtime(),
            _ => false,
        }
    }

    pub(crate) fn in_scenario(self, scenario: &str) -> Error {
        Error::Scenario {
            scenario: scenario.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
