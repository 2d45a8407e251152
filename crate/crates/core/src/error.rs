use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in `{0}`")]
    NonFinite(&'static str),

    #[error("both reinforcement indicators are zero; the urn could never change")]
    FrozenUrn,

    #[error("threshold order violated: rho2_hat = {rho2} > rho1_hat = {rho1}")]
    ThresholdOrder { rho1: f64, rho2: f64 },

    #[error("reinforcement {value} outside the support [{low}, {high}]")]
    ReinforcementOutOfSupport { value: f64, low: f64, high: f64 },

    #[error("empty admissible window: delta must be positive, got {0}")]
    EmptyWindow(f64),

    #[error("non-finite urn state at step {step}")]
    NumericAbort { step: u64 },

    #[error("step-bound guard violated at step {step}: |dZ| = {jump} with epsilon = {epsilon}")]
    GuardViolation { step: u64, jump: f64, epsilon: f64 },

    #[error("record was not extended to {multiplier}x the horizon")]
    NotExtended { multiplier: u64 },

    #[error("grid point {0} is missing from a record")]
    MissingGridPoint(u64),

    #[error("unequal reinforcement means ({m1} vs {m2}); the mixture CLT needs m1 = m2")]
    UnequalMeans { m1: f64, m2: f64 },

    #[error("no samples")]
    EmptySample,

    #[error("margin {margin} unreachable within {cap} replications")]
    UnreachableMargin { margin: f64, cap: u64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("replication {replication} failed: {source}")]
    Replication {
        replication: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("suite {suite} could not be evaluated: {source}")]
    Suite {
        suite: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

pub(crate) fn ensure_finite<T: crate::Scalar>(name: &'static str, x: T) -> Result<T> {
    if x.is_finite_scalar() {
        Ok(x)
    } else {
        Err(Error::NonFinite(name))
    }
}
