use thiserror::Error;

/// Why an integration stopped before reaching its end time.
#[derive(Debug, Clone, PartialEq)]
pub enum IntegrationFailureKind {
    /// The step budget in the integrator configuration was used up.
    StepLimit { max_steps: usize },
    /// The vector field refused to evaluate near the reached state.
    DomainExit { reason: String },
    /// The step size collapsed below the resolvable spacing at `t`.
    StepUnderflow { step: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain violation at {point:?}: {reason}")]
    Domain { point: Vec<f64>, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value while evaluating {what} at {point:?}")]
    NonFinite { what: String, point: Vec<f64> },

    #[error(
        "superposition constraint violated: (k - 2(k1 + k3))^2 - 4 k1 k3 = {discriminant:e} < 0"
    )]
    ConstraintViolation { discriminant: f64 },

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("solution outside the rule's branch: {0}")]
    OutOfBranch(String),

    #[error("integration failed at t = {t}: {kind:?} (state {state:?})")]
    Integration {
        t: f64,
        state: Vec<f64>,
        kind: IntegrationFailureKind,
    },

    #[error("time {t} outside trajectory span [{t0}, {t1}]")]
    OutOfRange { t: f64, t0: f64, t1: f64 },

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(point: &[f64], reason: impl Into<String>) -> Self {
        Error::Domain {
            point: point.to_vec(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
