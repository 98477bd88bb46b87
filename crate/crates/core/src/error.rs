use thiserror::Error;

/// Everything that can go wrong inside the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state became non-finite or exceeded the divergence threshold at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("grid has {n_steps} steps, the method needs at least {required}")]
    GridTooShort { n_steps: usize, required: usize },

    #[error("initial state has {got} components, the field has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("resonant denominator 4ω² − Ω² vanishes")]
    ResonantDenominator,

    #[error("samples per 2π window is not an integer ({samples_per_window})")]
    WindowMismatch { samples_per_window: f64 },

    #[error("averaging window [{from}, {to}] lies outside the trajectory")]
    WindowOutOfRange { from: f64, to: f64 },

    #[error("need at least {required} points, got {got}")]
    TooFewPoints { required: usize, got: usize },

    #[error(
        "denominator of the asymptotic particular solution comes within {min_denominator} of zero"
    )]
    DenominatorNearZero { min_denominator: f64 },

    #[error("point ({k1}, {k2}) lies outside the open unit disk")]
    DomainError { k1: f64, k2: f64 },

    #[error("Hamiltonian denominator vanishes at ({k1}, {k2})")]
    SingularDenominator { k1: f64, k2: f64 },

    #[error("envelope flow left the domain |K| < 1 at τ′ = {tau}")]
    LeftDomain { tau: f64 },

    #[error("Hamiltonian level {h0} has a negative radical")]
    InfeasibleLevel { h0: f64 },

    #[error("Hamiltonian level is zero")]
    ZeroLevel,

    #[error("orbit did not close: {0}")]
    NotClosedOrbit(String),

    #[error("level-set traversal failed: {0}")]
    TurningPointResolution(String),

    #[error("root finding did not converge: {0}")]
    NoConvergence(String),

    #[error("i/o failure: {0}")]
    Io(String),
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

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
