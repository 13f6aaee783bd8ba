use alloc::string::String;

/// Errors raised by the model layers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("VAR is not stationary: spectral radius {spectral_radius}")]
    NonStationary { spectral_radius: f64 },
    #[error("singular linear system ({what}): condition number {condition}")]
    SingularSystem { what: String, condition: f64 },
    #[error("innovation covariance is not positive semidefinite (min eigenvalue {min_eigenvalue})")]
    CholeskyFailure { min_eigenvalue: f64 },
    #[error("carbon cost exceeds output value: sector {sector}, tau*delta = {value}")]
    PriceDominance { sector: usize, value: f64 },
    #[error("equilibrium system is singular: condition number {condition}")]
    SingularEquilibrium { condition: f64 },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("firm value series does not converge: exponent {varrho}")]
    NotSummable { varrho: f64 },
    #[error("quantile undefined: only {tail} tail paths, need at least 5")]
    QuantileUndefined { tail: f64 },
    #[error("zero denominator at {0}")]
    ZeroDenominator(String),
    #[error("series too short: {got} observations, need {need}")]
    TooShort { got: usize, need: usize },
    #[error("regressor matrix is rank deficient (rank {rank} < {need})")]
    RankDeficient { rank: usize, need: usize },
    #[error("likelihood has no interior maximum on the bracket")]
    BracketFailure,
}

pub type Result<T> = core::result::Result<T, Error>;
