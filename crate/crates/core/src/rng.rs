//! Seed derivation for independent random streams.
//!
//! Every random quantity in a run comes from a `ChaCha8Rng` whose seed is a
//! pure function of the master seed and a path of integer labels (sweep
//! point, protocol variant, chunk, stream purpose). Work can therefore be
//! split across any number of threads without changing a single draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags for the streams used inside one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Codebook = 0xC0DE,
    Channel = 0xC4A1,
    Data = 0xDA7A,
    Noise = 0x0015E,
    Design = 0xDE51,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes a master seed with a path of labels into a new 64-bit seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &label| splitmix64(acc ^ splitmix64(label)))
}

/// Builds the generator for `stream` under the given derived seed.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[stream as u64]))
}
