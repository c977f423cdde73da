//! Seeded random streams.
//!
//! Every run owns one root seed. Components never share a generator: each one
//! asks for a named sub-stream, which is a ChaCha8 keystream selected by the
//! run seed (key) and a hash of the name (stream id). Sub-streams are therefore
//! independent of the order in which components are constructed or drawn from.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

/// Deterministic stream for `seed`. Equal seeds give identical sequences.
pub fn seeded_rng(seed: u64) -> RandomStream {
    RandomStream::with_stream(seed, 0)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl RandomStream {
    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream keyed by `name`; does not consume draws from `self`.
    pub fn substream(&self, name: &str) -> RandomStream {
        let mut bytes = self.stream.to_le_bytes().to_vec();
        bytes.extend_from_slice(name.as_bytes());
        RandomStream::with_stream(self.seed, fnv1a(&bytes))
    }

    /// Indexed child of a named sub-stream, e.g. one per evaluation episode.
    pub fn substream_indexed(&self, name: &str, index: u64) -> RandomStream {
        self.substream(&format!("{name}#{index}"))
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
