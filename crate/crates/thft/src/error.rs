use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThftError {
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("signature mismatch between operands")]
    SignatureMismatch,
    #[error("edge-case assembly needs k = m + n >= 2, got m={m} n={n} k={k}")]
    NotEdgeCase { m: usize, n: usize, k: usize },
    #[error("scale parameter must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("regulator window must satisfy 0 <= epsilon <= L, got epsilon={epsilon} L={l}")]
    BadWindow { epsilon: f64, l: f64 },
    #[error("epsilon = 0 with N={n} >= k={k}: the limit is not guaranteed")]
    LimitNotGuaranteed { n: u32, k: u32 },
    #[error("quadrature did not reach tolerance: value {value}, error estimate {error}")]
    QuadratureNotConverged { value: f64, error: f64 },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

pub type Result<T> = std::result::Result<T, ThftError>;
