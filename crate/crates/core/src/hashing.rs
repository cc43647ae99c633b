//! Stable 64-bit hashing shared by feature extraction, n-gram tables, model
//! fingerprints and seed derivation. Everything here must produce identical
//! values across platforms and toolchain versions, so `std::hash` is not used.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Incremental FNV-1a, for hashing several fields without allocating.
#[derive(Debug, Clone, Copy)]
pub struct Fnv(u64);

impl Default for Fnv {
    fn default() -> Self {
        Fnv(FNV_OFFSET)
    }
}

impl Fnv {
    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive combination of two hashes.
pub fn combine(a: u64, b: u64) -> u64 {
    mix64(a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b)
}

pub fn token_hash(token: &str) -> u64 {
    fnv1a(token.as_bytes())
}

/// Derives an independent seed for a named pipeline stage.
pub fn derive_seed(seed: u64, stage: &str) -> u64 {
    combine(mix64(seed), fnv1a(stage.as_bytes()))
}

/// Seed for item `index` of a stream generated under `seed`.
pub fn item_seed(seed: u64, index: u64) -> u64 {
    combine(mix64(seed ^ 0x5851_f42d_4c95_7f2d), index)
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn item_rng(seed: u64, index: u64) -> ChaCha8Rng {
    rng_for(item_seed(seed, index))
}
