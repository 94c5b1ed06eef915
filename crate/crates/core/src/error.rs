use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no entangled state found after {0} draws")]
    SamplingExhausted(usize),

    #[error("witness family index {0} out of range 1..=6")]
    BadIndex(usize),

    #[error("ket is a product state (Schmidt coefficient {0:.3e})")]
    ProductKet(f64),

    #[error("no unmeasured witness family remains")]
    Exhausted,

    #[error("dataset is not informationally complete: {0}")]
    NotInformationallyComplete(String),

    #[error("missing Pauli table entry {0}")]
    MissingEntry(String),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("estimator did not converge after {0} iterations")]
    NotConverged(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
