//! Deterministic, splittable random-number streams.
//!
//! Every stochastic routine in this crate draws from a [`RngStream`]: a
//! (seed, stream) pair mapped onto ChaCha8. Distinct stream ids under the
//! same seed yield independent streams, which is what makes common-random-
//! numbers designs and worker-count-independent parallel simulation possible:
//! work item *i* always uses stream *i*, no matter which thread runs it.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Stream handle
// ---------------------------------------------------------------------------

/// Addressable random stream: a root seed plus a stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    /// Root seed shared by the whole run.
    pub seed: u64,
    /// Stream id; distinct ids give independent streams.
    pub stream_id: u64,
}

impl RngStream {
    /// Creates a stream handle.
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Derives the handle for a sub-stream (e.g. one replication).
    pub fn substream(&self, offset: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: self.stream_id.wrapping_add(offset),
        }
    }

    /// Instantiates the generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
