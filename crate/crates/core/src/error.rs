use thiserror::Error;

/// Rejected model parameters.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid offspring law: {0}")]
    InvalidOffspring(String),
    #[error("pgf argument {0} outside [0, 1]")]
    PgfDomain(f64),
    #[error("invalid environment model: {0}")]
    InvalidEnvironment(String),
    #[error("invalid displacement model: {0}")]
    InvalidDisplacement(String),
    #[error("brood of size {v} exceeds angular dimension {k}")]
    BroodTooLarge { v: usize, k: usize },
}
