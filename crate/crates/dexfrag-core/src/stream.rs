//! Deterministic random-stream derivation.
//!
//! All randomness flows from a single master seed. Substreams are derived by
//! name and index, so independent pieces of work (per configuration, per
//! shard, per simulation) can each own a generator without coordinating, and
//! the merged results do not depend on how the work was scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// SplitMix64 finalizer; scrambles structured inputs into well-mixed states.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A node in the seed-derivation tree.
///
/// `root(seed)` makes the tree root; `child(name)` and `index(i)` derive
/// subtrees. Equal derivation paths give equal keys, distinct paths give
/// (with overwhelming probability) unrelated generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    state: u64,
}

impl StreamKey {
    pub fn root(master_seed: u64) -> Self {
        StreamKey {
            state: splitmix64(master_seed ^ FNV_OFFSET),
        }
    }

    /// Derives a named substream, e.g. one per module or output artifact.
    pub fn child(&self, name: &str) -> Self {
        let mut h = self.state ^ FNV_OFFSET;
        for b in name.bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
        }
        StreamKey {
            state: splitmix64(h),
        }
    }

    /// Derives the `i`-th substream, e.g. one per shard or simulation.
    pub fn index(&self, i: u64) -> Self {
        StreamKey {
            state: splitmix64(self.state ^ splitmix64(i ^ 0xa076_1d64_78bd_642f)),
        }
    }

    /// The derived 64-bit seed value, usable wherever a raw seed is expected.
    pub fn seed(&self) -> u64 {
        self.state
    }

    /// Instantiates the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.state)
    }
}

/// Order-sensitive 64-bit hash used to fingerprint configurations.
///
/// Not cryptographic; two runs with the same fingerprint used the same
/// parameters and seed, which is all reproducibility bookkeeping needs.
#[derive(Debug, Clone)]
pub struct Fingerprint {
    state: u64,
}

impl Fingerprint {
    pub fn new() -> Self {
        Fingerprint { state: FNV_OFFSET }
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) -> &mut Self {
        for &b in bytes {
            self.state = (self.state ^ u64::from(b)).wrapping_mul(FNV_PRIME);
        }
        self
    }

    pub fn write_u64(&mut self, v: u64) -> &mut Self {
        self.write_bytes(&v.to_le_bytes())
    }

    pub fn write_usize(&mut self, v: usize) -> &mut Self {
        self.write_u64(v as u64)
    }

    pub fn write_f64(&mut self, v: f64) -> &mut Self {
        self.write_u64(v.to_bits())
    }

    pub fn write_str(&mut self, s: &str) -> &mut Self {
        self.write_bytes(s.as_bytes())
    }

    pub fn finish(&self) -> u64 {
        splitmix64(self.state)
    }
}

impl Default for Fingerprint {
    fn default() -> Self {
        Self::new()
    }
}
