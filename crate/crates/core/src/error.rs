use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("level {level} out of range for a {n_levels}-level emitter")]
    InvalidLevel { level: usize, n_levels: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("layout mismatch: {0}")]
    WrongLayout(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("step size underflow at t = {t} ns (h = {h:e}); problem too stiff for the explicit integrator")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("step budget of {steps} exhausted at t = {t} ns")]
    StepLimit { t: f64, steps: usize },

    #[error("integration diverged: non-finite state at t = {t} ns")]
    Divergence { t: f64 },

    #[error("no contrast between spin states (n0 = {n0}, n1 = {n1})")]
    NoContrast { n0: f64, n1: f64 },

    #[error("negative threshold {0}")]
    NegativeThreshold(i64),

    #[error("invalid priors q0 = {q0}, q1 = {q1}")]
    InvalidPriors { q0: f64, q1: f64 },

    #[error("time grids differ: {0}")]
    GridMismatch(String),

    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),

    #[error("config error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("unknown config key {0}")]
    UnknownKey(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerical pipeline rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepSizeUnderflow { .. } | Error::StepLimit { .. } | Error::Divergence { .. }
        )
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
