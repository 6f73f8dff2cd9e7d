use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid probability vector {0:?}: entries must lie in [0,1] and sum to 1")]
    InvalidProbability(Vec<f64>),

    #[error("payoff matrices must have finite entries")]
    NonFiniteGame,

    #[error("operation requires a symmetric game (B = A^T)")]
    NotSymmetric,

    #[error("quantum state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("joint state is not a product state (reduced purity {0})")]
    NotProduct(f64),

    #[error("point ({0}, {1}) is not strictly interior")]
    NotInterior(f64, f64),

    #[error("game has no internal equilibrium")]
    NoInternalEquilibrium,

    #[error("argument {value} outside [0,1]")]
    OutOfUnitInterval { value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite derivative at t = {t}: state {state}")]
    NonFinite { t: f64, state: String },

    #[error("trajectory needs at least {needed} samples, got {got}")]
    ShortTrajectory { needed: usize, got: usize },

    #[error("unknown preset game `{0}`")]
    UnknownPreset(String),

    #[error("unknown hamiltonian mode `{0}`")]
    UnknownMode(String),

    #[error("grid point ({x0}, {y0}): {source}")]
    GridPoint {
        x0: f64,
        y0: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFinite { .. } => true,
            Error::GridPoint { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
