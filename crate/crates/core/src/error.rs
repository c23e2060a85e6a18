use thiserror::Error;

/// Failure modes shared by every module of the crate.
///
/// Operations fail loudly instead of returning huge or NaN values: a
/// denominator below the pole threshold, a modulus outside its domain or a
/// degenerate geometric configuration all surface as one of these variants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("near pole: {0}")]
    NearPole(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("branch error: {0}")]
    Branch(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Threshold below which a denominator is treated as a pole.
pub const POLE_THRESHOLD: f64 = 1e-12;
