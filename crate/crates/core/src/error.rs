use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("state is not normalized: squared norm {0}")]
    NotNormalized(f64),

    #[error("invalid Schmidt coefficients: {0}")]
    InvalidLambdas(String),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("measurement is not complete: max entrywise error {max_error:e} at block ({k}, {l})")]
    IncompleteMeasurement { max_error: f64, k: usize, l: usize },

    #[error("Kraus operators for outcome {outcome} do not resolve identity: max deviation {deviation:e}")]
    KrausIncomplete { outcome: usize, deviation: f64 },

    #[error(
        "outcome count mismatch: measurement has {measurement}, corrections have {corrections}"
    )]
    OutcomeCountMismatch {
        measurement: usize,
        corrections: usize,
    },

    #[error("{outcomes} outcomes cannot resolve identity on the {dim}-dimensional joint space")]
    TooFewOutcomes { outcomes: usize, dim: usize },

    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("protocol document: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
