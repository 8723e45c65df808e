use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cube not resolvable: scale {scale} is finer than resolution {resolution}")]
    NotResolvable { scale: i32, resolution: i32 },
    #[error("shift by 2^-{scale} is not aligned with resolution {resolution}")]
    Misaligned { scale: i32, resolution: i32 },
    #[error("conditional expectation at scale {k} exceeds resolution {resolution}")]
    ExpectationTooFine { k: i32, resolution: i32 },
    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),
    #[error("incompatible exponents: {0}")]
    Exponents(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("band {j} outside resolvable range (2^(j+2) > Nyquist {nyquist})")]
    BandOutOfRange { j: i32, nyquist: f64 },
    #[error("unknown corpus family `{0}`")]
    UnknownFamily(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("invalid grid function: {0}")]
    InvalidGrid(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
