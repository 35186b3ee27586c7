//! Noise substreams.
//!
//! Every (seed, row, node) triple owns an independent ChaCha8 stream whose
//! 256-bit key is the little-endian concatenation of the seed, the row
//! number, the node's declaration index and a fixed tag. Streams are derived
//! rather than consumed sequentially, so rows can be generated in any order
//! or in parallel and counterfactual evaluations reuse the exact same noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Noise;

const TAG: [u8; 8] = *b"ckit-sem";

pub fn substream(seed: u64, row: u64, node: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&row.to_le_bytes());
    key[16..24].copy_from_slice(&node.to_le_bytes());
    key[24..].copy_from_slice(&TAG);
    ChaCha8Rng::from_seed(key)
}

/// Draws one noise value for `(seed, row, node)`.
pub fn draw(noise: &Noise, seed: u64, row: u64, node: u64) -> f64 {
    let mut rng = substream(seed, row, node);
    match *noise {
        Noise::Normal { mean, sd } => {
            let z: f64 = rng.sample(StandardNormal);
            mean + sd * z
        }
        Noise::Bernoulli { p } => {
            if rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        }
        Noise::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
    }
}
