use thiserror::Error;

/// Errors raised across the sharing, MPC, oracle and protocol layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid ring configuration: {0}")]
    InvalidConfig(String),
    #[error("coordinate {index} = {value} exceeds bound {bound}")]
    CoordinateOutOfBound { index: usize, value: f64, bound: f64 },
    #[error("dimension {dim} violates the distance overflow bound for this ring")]
    OverflowRisk { dim: usize },
    #[error("share party mismatch: expected {expected}, got {got}")]
    PartyMismatch { expected: String, got: String },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("scale mismatch: {left} vs {right}")]
    ScaleMismatch { left: u8, right: u8 },
    #[error("Beaver triple {id} already consumed")]
    TripleReuse { id: u64 },
    #[error("opened values do not belong to triple {expected} (got {got})")]
    TripleMismatch { expected: u64, got: u64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("triple inventory exhausted")]
    TripleExhausted,
    #[error("robust rule needs at least f + 3 = {needed} workers, got {got}")]
    TooFewWorkers { needed: usize, got: usize },
    #[error("no median candidate has a strict majority within the threshold")]
    NoMedianCandidate,
    #[error("robust oracle selected fewer than 2 workers; round aborted")]
    OracleAbort,
    #[error("prime field {p} too small for {l} bit accumulations (need p > l + 2)")]
    FieldOverflow { p: u64, l: u32 },
    #[error("malformed serialized data: {0}")]
    Malformed(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
}

pub type Result<T> = std::result::Result<T, Error>;
