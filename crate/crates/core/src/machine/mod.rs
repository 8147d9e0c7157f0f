//! The two-party oblivious cell-probe machine.
//!
//! A [`Machine`] holds `K` server cells of `w` bits each, `m` bits of client
//! memory and a [`RandomTape`]. Every server access goes through
//! [`Machine::probe`] (or the [`Machine::read`] / [`Machine::write`]
//! shorthands) and is appended to the trace of the currently open operation.
//! Client memory and the tape are free and invisible to the adversary.

mod tape;
mod trace;

use std::collections::HashSet;

pub use tape::RandomTape;
pub use trace::{
    Address, OperationTrace, ProbeKind, ProbeRecord, SessionTrace, TraceParseError, TRACE_HEADER,
};

pub type Word = u64;

/// Widest supported cell.
pub const MAX_WORD_BITS: u32 = 64;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("cell count must be at least 1")]
    NoCells,
    #[error(
        "word of {word_bits} bits cannot hold addresses of {cell_count} cells (need {needed})"
    )]
    WordTooNarrow {
        word_bits: u32,
        cell_count: u64,
        needed: u32,
    },
    #[error("word size {0} outside 1..=64")]
    WordBitsOutOfRange(u32),
    #[error("address {address} out of range for {cell_count} cells")]
    AddressOutOfRange { address: Address, cell_count: u64 },
    #[error("word {word:#x} does not fit in {word_bits} bits")]
    OversizedWord { word: Word, word_bits: u32 },
    #[error("probe issued outside an operation")]
    NoOpenOperation,
    #[error("operation already open")]
    NestedOperation,
    #[error("client bit {index} out of range for {client_bits} bits")]
    ClientBitOutOfRange { index: u64, client_bits: u64 },
    #[error("probe to {address} halted: {reason}")]
    Halted {
        address: Address,
        reason: HaltReason,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltReason {
    /// The probe targets a cell whose contents the replaying party lacks.
    Forbidden,
    /// The operation already issued `cap` probes.
    ProbeCap,
}

impl std::fmt::Display for HaltReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HaltReason::Forbidden => f.write_str("address is forbidden"),
            HaltReason::ProbeCap => f.write_str("probe cap reached"),
        }
    }
}

/// Stops an operation before it touches a forbidden address or exceeds a probe
/// budget. Used to replay queries against a partially known memory image.
#[derive(Debug, Clone, Default)]
pub struct ProbeGuard {
    pub forbidden: HashSet<Address>,
    pub cap: Option<usize>,
}

/// Smallest number of bits that can name every one of `cell_count` addresses.
pub fn address_bits(cell_count: u64) -> u32 {
    if cell_count <= 1 {
        0
    } else {
        64 - (cell_count - 1).leading_zeros()
    }
}

#[derive(Debug, Clone)]
pub struct Machine {
    cell_count: u64,
    word_bits: u32,
    client_bits: u64,
    cells: Vec<Word>,
    client: Vec<u64>,
    tape: RandomTape,
    trace: SessionTrace,
    open: Option<OperationTrace>,
    guard: Option<ProbeGuard>,
}

impl Machine {
    pub fn new(
        cell_count: u64,
        word_bits: u32,
        client_bits: u64,
        seed: u64,
    ) -> Result<Self, MachineError> {
        if cell_count == 0 {
            return Err(MachineError::NoCells);
        }
        if word_bits == 0 || word_bits > MAX_WORD_BITS {
            return Err(MachineError::WordBitsOutOfRange(word_bits));
        }
        let needed = address_bits(cell_count);
        if word_bits < needed {
            return Err(MachineError::WordTooNarrow {
                word_bits,
                cell_count,
                needed,
            });
        }
        Ok(Self {
            cell_count,
            word_bits,
            client_bits,
            cells: vec![0; cell_count as usize],
            client: vec![0; client_bits.div_ceil(64) as usize],
            tape: RandomTape::new(seed),
            trace: SessionTrace::default(),
            open: None,
            guard: None,
        })
    }

    pub fn cell_count(&self) -> u64 {
        self.cell_count
    }

    pub fn word_bits(&self) -> u32 {
        self.word_bits
    }

    pub fn client_bits(&self) -> u64 {
        self.client_bits
    }

    pub fn tape(&self) -> &RandomTape {
        &self.tape
    }

    pub fn in_operation(&self) -> bool {
        self.open.is_some()
    }

    pub fn begin_operation(&mut self, label: &str) -> Result<(), MachineError> {
        if self.open.is_some() {
            return Err(MachineError::NestedOperation);
        }
        self.open = Some(OperationTrace {
            label: trace::sanitize_label(label),
            probes: Vec::new(),
        });
        Ok(())
    }

    pub fn end_operation(&mut self) -> Result<(), MachineError> {
        let op = self.open.take().ok_or(MachineError::NoOpenOperation)?;
        self.trace.operations.push(op);
        Ok(())
    }

    /// Probes of the operation currently open, if any.
    pub fn open_probe_count(&self) -> Option<usize> {
        self.open.as_ref().map(OperationTrace::len)
    }

    pub fn probe(
        &mut self,
        address: Address,
        kind: ProbeKind,
        word: Option<Word>,
    ) -> Result<Word, MachineError> {
        let Some(op) = self.open.as_mut() else {
            return Err(MachineError::NoOpenOperation);
        };
        if address >= self.cell_count {
            return Err(MachineError::AddressOutOfRange {
                address,
                cell_count: self.cell_count,
            });
        }
        if let Some(guard) = &self.guard {
            if guard.cap.is_some_and(|cap| op.probes.len() >= cap) {
                return Err(MachineError::Halted {
                    address,
                    reason: HaltReason::ProbeCap,
                });
            }
            if guard.forbidden.contains(&address) {
                return Err(MachineError::Halted {
                    address,
                    reason: HaltReason::Forbidden,
                });
            }
        }
        let slot = &mut self.cells[address as usize];
        let result = match kind {
            ProbeKind::Read => *slot,
            ProbeKind::Write => {
                let word = word.unwrap_or(0);
                if self.word_bits < 64 && word >> self.word_bits != 0 {
                    return Err(MachineError::OversizedWord {
                        word,
                        word_bits: self.word_bits,
                    });
                }
                *slot = word;
                word
            }
        };
        op.probes.push(ProbeRecord { address, kind });
        Ok(result)
    }

    pub fn read(&mut self, address: Address) -> Result<Word, MachineError> {
        self.probe(address, ProbeKind::Read, None)
    }

    pub fn write(&mut self, address: Address, word: Word) -> Result<(), MachineError> {
        self.probe(address, ProbeKind::Write, Some(word))
            .map(|_| ())
    }

    /// The adversary's view so far. Any operation still open is not included.
    pub fn adversary_view(&self) -> &SessionTrace {
        &self.trace
    }

    pub fn into_view(self) -> SessionTrace {
        self.trace
    }

    pub fn client_bit(&self, index: u64) -> Result<bool, MachineError> {
        self.check_client(index)?;
        Ok((self.client[(index / 64) as usize] >> (index % 64)) & 1 == 1)
    }

    pub fn set_client_bit(&mut self, index: u64, value: bool) -> Result<(), MachineError> {
        self.check_client(index)?;
        let limb = &mut self.client[(index / 64) as usize];
        let mask = 1u64 << (index % 64);
        if value {
            *limb |= mask;
        } else {
            *limb &= !mask;
        }
        Ok(())
    }

    fn check_client(&self, index: u64) -> Result<(), MachineError> {
        if index >= self.client_bits {
            Err(MachineError::ClientBitOutOfRange {
                index,
                client_bits: self.client_bits,
            })
        } else {
            Ok(())
        }
    }

    pub fn set_guard(&mut self, guard: Option<ProbeGuard>) {
        self.guard = guard;
    }

    /// A copy of the memory image (cells, client memory, tape) with an empty
    /// trace and no guard.
    pub fn fork(&self) -> Machine {
        Machine {
            trace: SessionTrace::default(),
            open: None,
            guard: None,
            ..self.clone()
        }
    }

    /// Direct view of a cell, bypassing the trace. For inspection in tests and
    /// experiment bookkeeping only.
    pub fn peek(&self, address: Address) -> Option<Word> {
        self.cells.get(address as usize).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks_word_width() {
        let m = Machine::new(8, 3, 0, 1).unwrap();
        assert!((0..8).all(|a| m.peek(a) == Some(0)));
        assert_eq!(
            Machine::new(8, 2, 0, 1).unwrap_err(),
            MachineError::WordTooNarrow {
                word_bits: 2,
                cell_count: 8,
                needed: 3
            }
        );
        let single = Machine::new(1, 1, 4, 7).unwrap();
        assert_eq!(single.cell_count(), 1);
        assert_eq!(single.client_bits(), 4);
        assert_eq!(Machine::new(0, 8, 0, 1).unwrap_err(), MachineError::NoCells);
        assert_eq!(address_bits(9), 4);
        assert_eq!(address_bits(1), 0);
    }

    #[test]
    fn read_after_write() {
        let mut m = Machine::new(8, 3, 0, 1).unwrap();
        m.begin_operation("op").unwrap();
        m.write(3, 0b101).unwrap();
        assert_eq!(m.read(3).unwrap(), 0b101);
        assert_eq!(m.read(5).unwrap(), 0);
        assert_eq!(
            m.write(8, 1).unwrap_err(),
            MachineError::AddressOutOfRange {
                address: 8,
                cell_count: 8
            }
        );
        assert_eq!(
            m.write(2, 0b1000).unwrap_err(),
            MachineError::OversizedWord {
                word: 8,
                word_bits: 3
            }
        );
        m.end_operation().unwrap();
        assert_eq!(m.adversary_view().operations[0].len(), 3);
    }

    #[test]
    fn operation_protocol() {
        let mut m = Machine::new(8, 3, 0, 1).unwrap();
        assert_eq!(
            m.end_operation().unwrap_err(),
            MachineError::NoOpenOperation
        );
        assert_eq!(m.read(0).unwrap_err(), MachineError::NoOpenOperation);
        m.begin_operation("a").unwrap();
        assert_eq!(
            m.begin_operation("b").unwrap_err(),
            MachineError::NestedOperation
        );
        m.end_operation().unwrap();
        assert_eq!(m.adversary_view().operations.len(), 1);
        assert!(m.adversary_view().operations[0].is_empty());
    }

    #[test]
    fn view_preserves_order_and_duplicates() {
        let mut m = Machine::new(8, 3, 0, 1).unwrap();
        assert!(m.adversary_view().operations.is_empty());
        m.begin_operation("q").unwrap();
        for a in [2, 2, 5] {
            m.read(a).unwrap();
        }
        m.end_operation().unwrap();
        let addrs: Vec<_> = m.adversary_view().operations[0].addresses().collect();
        assert_eq!(addrs, vec![2, 2, 5]);
    }

    #[test]
    fn guard_halts_before_recording() {
        let mut m = Machine::new(8, 3, 0, 1).unwrap();
        m.set_guard(Some(ProbeGuard {
            forbidden: [4].into_iter().collect(),
            cap: Some(2),
        }));
        m.begin_operation("q").unwrap();
        m.read(1).unwrap();
        assert_eq!(
            m.read(4).unwrap_err(),
            MachineError::Halted {
                address: 4,
                reason: HaltReason::Forbidden
            }
        );
        m.read(2).unwrap();
        assert_eq!(
            m.read(3).unwrap_err(),
            MachineError::Halted {
                address: 3,
                reason: HaltReason::ProbeCap
            }
        );
        assert_eq!(m.open_probe_count(), Some(2));
    }

    #[test]
    fn client_memory_is_untraced() {
        let mut m = Machine::new(4, 2, 10, 1).unwrap();
        m.set_client_bit(9, true).unwrap();
        assert!(m.client_bit(9).unwrap());
        assert!(m.client_bit(10).is_err());
        assert_eq!(m.adversary_view().total_probes(), 0);
    }

    #[test]
    fn fork_copies_memory_not_trace() {
        let mut m = Machine::new(4, 8, 0, 1).unwrap();
        m.begin_operation("w").unwrap();
        m.write(1, 42).unwrap();
        m.end_operation().unwrap();
        let f = m.fork();
        assert_eq!(f.peek(1), Some(42));
        assert!(f.adversary_view().operations.is_empty());
        assert_eq!(f.tape(), m.tape());
    }
}
