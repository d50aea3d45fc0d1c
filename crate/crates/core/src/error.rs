use thiserror::Error;

pub type Result<T, E = TinError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum TinError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("channel matrix must have at least one user")]
    EmptyChannel,

    #[error("non-finite value {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("negative channel strength {value} at ({row}, {col}); clip exponents to 0 first")]
    NegativeStrength { row: usize, col: usize, value: f64 },

    #[error("power exponent {value} of user {user} is invalid (must be finite and <= 0)")]
    InvalidPowerExponent { user: usize, value: f64 },

    #[error("user {user} is silent; the polyhedral relaxation needs finite exponents")]
    SilentInRelaxation { user: usize },

    #[error("GDoF entry {value} of user {user} is invalid (must be finite and >= 0)")]
    InvalidGdof { user: usize, value: f64 },

    #[error("nominal power must exceed 1, got {0}")]
    InvalidNominalPower(f64),

    #[error("power ratio {value} at ({row}, {col}) must be positive and finite")]
    NonPositiveRatio { row: usize, col: usize, value: f64 },

    #[error("user index {user} out of range for K = {k}")]
    UserOutOfRange { user: usize, k: usize },

    #[error("cyclic sequence {0:?} is invalid (needs >= 2 distinct users)")]
    InvalidCycle(Vec<usize>),

    #[error("weight {value} of user {user} is negative")]
    NegativeWeight { user: usize, value: f64 },

    #[error("K = {k} exceeds the supported maximum of {max} for this operation")]
    TooManyUsers { k: usize, max: usize },

    #[error("the TIN optimality condition fails for users {0:?}")]
    ConditionViolated(Vec<usize>),

    #[error("GDoF tuple lies outside the polyhedral TIN region")]
    InfeasiblePoint,

    #[error("region is empty")]
    EmptyRegion,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
}
