//! Seeded, splittable random streams.
//!
//! Every randomized routine takes a `u64` seed or a stream built from one.
//! Child seeds are derived with SplitMix64 so sibling streams are
//! independent and replayable from the parent seed alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child of `parent`.
pub fn child_seed(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index))
}

/// Hands out child seeds in order.
#[derive(Clone, Debug)]
pub struct SeedSplitter {
    parent: u64,
    next: u64,
}

impl SeedSplitter {
    pub fn new(parent: u64) -> Self {
        Self { parent, next: 0 }
    }

    pub fn next_seed(&mut self) -> u64 {
        let s = child_seed(self.parent, self.next);
        self.next += 1;
        s
    }

    pub fn next_stream(&mut self) -> Stream {
        stream(self.next_seed())
    }
}
