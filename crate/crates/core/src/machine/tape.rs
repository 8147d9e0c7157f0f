use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// The machine's random string, fixed before any operation runs.
///
/// The tape is an unbounded bit stream expanded lazily from a 64-bit seed, so
/// every position can be read in any order and two tapes with the same seed
/// are identical. Reading the tape is free: it never touches the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomTape {
    seed: u64,
}

impl RandomTape {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The 64-bit block covering bit positions `64 * index .. 64 * index + 64`.
    pub fn block(&self, index: u64) -> u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        // ChaCha word positions count 32-bit words.
        rng.set_word_pos(u128::from(index) * 2);
        rng.next_u64()
    }

    pub fn bit(&self, position: u64) -> bool {
        (self.block(position / 64) >> (position % 64)) & 1 == 1
    }

    /// `len` bits starting at `position`, least significant bit first. `len <= 64`.
    pub fn bits(&self, position: u64, len: u32) -> u64 {
        assert!(len <= 64, "at most 64 bits per read");
        if len == 0 {
            return 0;
        }
        let offset = position % 64;
        let lo = self.block(position / 64) >> offset;
        let value = if offset == 0 || offset + u64::from(len) <= 64 {
            lo
        } else {
            lo | (self.block(position / 64 + 1) << (64 - offset))
        };
        if len == 64 {
            value
        } else {
            value & ((1u64 << len) - 1)
        }
    }
}
