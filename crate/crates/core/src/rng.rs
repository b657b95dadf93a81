//! Deterministic substreams for parallel Monte Carlo.

use rand::SeedableRng;

pub use rand_chacha::ChaCha8Rng;

/// Factory mapping a 64-bit master seed and a `(cell, replication)`
/// index pair to an independent random stream.
///
/// The master seed keys a ChaCha generator; each pair selects one of its
/// counter-indexed streams. Results therefore do not depend on scheduling
/// or worker count, and any replication can be re-run in isolation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Substreams {
    master: u64,
}

const CELL_BITS: u32 = 24;
const REP_BITS: u32 = 40;

impl Substreams {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master: master_seed,
        }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Stream owned by replication `rep` of grid cell `cell`.
    ///
    /// Panics if `cell >= 2^24` or `rep >= 2^40`; the pair is packed
    /// injectively into the generator's 64-bit stream id.
    pub fn stream(&self, cell: u64, rep: u64) -> ChaCha8Rng {
        assert!(
            cell < (1 << CELL_BITS) && rep < (1 << REP_BITS),
            "substream index out of range"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream((cell << REP_BITS) | rep);
        rng
    }
}
