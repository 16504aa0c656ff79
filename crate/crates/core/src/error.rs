use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Integrity,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownName {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("ill-conditioned system: condition number {cond:.3e} exceeds {threshold:.3e}")]
    IllConditioned { cond: f64, threshold: f64 },

    #[error("solver did not converge after {iterations} iterations (KKT violation {violation:.3e})")]
    NonConvergence { iterations: usize, violation: f64 },

    #[error("integration diverged at step {step} (t = {time:.4} s)")]
    Divergence { step: usize, time: f64 },

    #[error("negative sampling acceptance rate {rate:.2e} is below 1e-3; check bandwidth and threshold")]
    LowAcceptance { rate: f64 },

    #[error("k-means produced an empty cluster after {retries} retries")]
    EmptyCluster { retries: usize },

    #[error("metric undefined: {0}")]
    Undefined(String),

    #[error("data integrity: {0}")]
    Integrity(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidConfig(_) | Error::UnknownName { .. } | Error::InvalidInput(_) => {
                ErrorClass::Usage
            }
            Error::Integrity(_) | Error::Json(_) | Error::Io(_) => ErrorClass::Integrity,
            Error::Stage { source, .. } => source.class(),
            _ => ErrorClass::Numerical,
        }
    }

    pub(crate) fn at_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| match e {
            // keep the innermost stage name
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}
