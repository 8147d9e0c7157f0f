//! Standalone checks: the reverse Pinsker inequality, exact cell-sampling
//! probabilities, resolved-query replay and encoding-length arithmetic.

mod encoding;
mod pinsker;
mod resolve;
mod sampling;

pub use encoding::{encoding_lengths, Branch, EncodingLengths, EncodingParams};
pub use pinsker::{reverse_pinsker_check, PinskerInstance, PinskerResult};
pub use resolve::{resolved_queries, ResolvedSet, MAX_RESOLVE_DIM};
pub use sampling::{
    default_sample_size, ln_binomial, resolution_probability, sample_cells, Resolution,
    SamplingParams,
};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("grid is {rows}x{cols} but a mass function has {len} entries")]
    GridShape {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("mass function {which} is invalid: {reason}")]
    InvalidMass { which: char, reason: String },
    #[error("need 0 <= 2t <= s <= population (t = {probes}, s = {sample_size}, population = {population})")]
    SamplingRange {
        population: u64,
        sample_size: u64,
        probes: u64,
    },
    #[error("sample of {s} from {available} cells")]
    SampleTooLarge { s: usize, available: usize },
    #[error("subcube dimension {0} too large to enumerate")]
    DimensionTooLarge(u32),
    #[error("F = {f} exceeds n_i = {n}")]
    TooManyReported { f: u64, n: u64 },
    #[error("|Gamma| = {gamma} must stay below 2^d' = 2^{d_prime}")]
    GammaTooLarge { gamma: u64, d_prime: u32 },
    #[error(transparent)]
    Structure(#[from] crate::structures::StructureError),
    #[error(transparent)]
    HardDist(#[from] crate::hard_dist::HardDistError),
}
