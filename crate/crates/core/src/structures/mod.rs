//! Data structures that run on the probe machine.
//!
//! [`LinearScan`] is an oblivious static ANN structure, [`Dynamized`] turns any
//! [`StaticStructure`] into an oblivious dynamic one on a binary-counter
//! rebuild schedule, and [`Bucketed`] is a deliberately leaky dynamic baseline
//! that confines each subcube to its own memory region.

mod bucketed;
mod cost;
mod dynamized;
mod linear;

use crate::ann::{AnnError, Answer, Point, PointError};
use crate::machine::{Address, Machine, MachineError, Word};

pub use bucketed::Bucketed;
pub use cost::{closed_form, cost_account, ClosedForm, CostReport, OpCost, OpKind, Predictions};
pub use dynamized::{Dynamized, EncryptionKey, Level, Op, OpOutcome};
pub use linear::{LinearKey, LinearScan};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum StructureError {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Ann(#[from] AnnError),
    #[error("{dim}-bit points need {dim} + 1 bit cells, machine has {word_bits}")]
    DimensionExceedsWord { dim: u32, word_bits: u32 },
    #[error("layout needs cells up to {needed}, machine has {available}")]
    OutOfMemory { needed: u64, available: u64 },
    #[error("handle does not describe a valid layout")]
    InvalidHandle,
    #[error("capacity exceeded after {inserted} inserts")]
    CapacityExceeded { inserted: u64 },
    #[error("point {0} lies outside every subcube")]
    OutsideSubcubes(Point),
    #[error("point of dimension {found}, structure holds dimension {expected}")]
    DimensionMismatch { expected: u32, found: u32 },
}

impl From<PointError> for StructureError {
    fn from(e: PointError) -> Self {
        StructureError::Ann(AnnError::from(e))
    }
}

/// An element handed to a static structure: a real point, or the filler that
/// fake and duplicate inserts contribute. Fillers never appear in answers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Real(Point),
    Null,
}

impl Item {
    pub fn point(&self) -> Option<&Point> {
        match self {
            Item::Real(p) => Some(p),
            Item::Null => None,
        }
    }
}

/// The contract the dynamization composes over: oblivious preprocessing and
/// queries, plus the cost model used for predictions.
pub trait StaticStructure {
    type Key: Clone + std::fmt::Debug;

    /// Lays `items` out starting at `base` and returns the query key.
    fn preprocess(
        &self,
        machine: &mut Machine,
        base: Address,
        items: &[Item],
    ) -> Result<Self::Key, StructureError>;

    fn query(
        &self,
        machine: &mut Machine,
        key: &Self::Key,
        q: &Point,
    ) -> Result<Answer, StructureError>;

    /// Folds two partial answers for `q`. Must not touch the machine.
    fn combine(&self, q: &Point, a: Answer, b: Answer) -> Answer;

    /// Cells occupied by a structure over `n` items.
    fn storage_cells(&self, n: u64) -> u64;

    /// Probes spent by `preprocess` on `n` items.
    fn preprocess_probes(&self, n: u64) -> u64;

    /// Probes spent by `query` on `n` items.
    fn query_probes(&self, n: u64) -> u64;
}

/// A structure that can answer a query inside an operation the caller has
/// already opened, without changing its own state.
pub trait QueryStructure {
    fn answer(&self, machine: &mut Machine, q: &Point) -> Result<Answer, StructureError>;
}

/// Cell encoding shared by the ANN structures: a tag bit above the point's
/// coordinates marks a real point; the all-zero word is the filler.
pub(crate) fn encode_item(item: &Item) -> Word {
    match item {
        Item::Real(p) => (1u64 << p.dim()) | p.as_u64().expect("checked dim < word bits"),
        Item::Null => 0,
    }
}

pub(crate) fn decode_item(word: Word, dim: u32) -> Option<Point> {
    if (word >> dim) & 1 == 1 {
        Point::from_u64(word & ((1u64 << dim) - 1), dim).ok()
    } else {
        None
    }
}

pub(crate) fn check_cell_width(dim: u32, machine: &Machine) -> Result<(), StructureError> {
    if dim + 1 > machine.word_bits() {
        Err(StructureError::DimensionExceedsWord {
            dim,
            word_bits: machine.word_bits(),
        })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_encoding_round_trips_and_marks_fillers() {
        let p = Point::from_u64(0b0110, 4).unwrap();
        let w = encode_item(&Item::Real(p.clone()));
        assert_eq!(w, 0b10110);
        assert_eq!(decode_item(w, 4), Some(p));
        assert_eq!(decode_item(encode_item(&Item::Null), 4), None);
        let zero = Point::zero(4).unwrap();
        assert_eq!(
            decode_item(encode_item(&Item::Real(zero.clone())), 4),
            Some(zero)
        );
    }
}
