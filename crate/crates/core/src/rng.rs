//! Seed derivation for reproducible noise streams.
//!
//! Every random draw in the simulator comes from a [`ChaCha8Rng`] obtained
//! through [`stream`]. A run seed is mixed with a [`Domain`] tag to key the
//! generator, and the ChaCha stream id selects an independent sub-stream
//! (per cell, per symbol, per trial). ChaCha is counter based, so two streams
//! with different ids never overlap and the values drawn from one stream do
//! not depend on how many values were drawn from any other.
//!
//! Nested indices (for example trial `t`, then cell `(i, j)`) are handled by
//! deriving a child seed with [`child_seed`] and opening streams from it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct domains never share a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Programming,
    Perturbation,
    Noise,
    Channel,
    Payload,
    Trial,
    Test,
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::Programming => 0x5052_4f47,
            Domain::Perturbation => 0x5045_5254,
            Domain::Noise => 0x4e4f_4953,
            Domain::Channel => 0x4348_414e,
            Domain::Payload => 0x5041_594c,
            Domain::Trial => 0x5452_4941,
            Domain::Test => 0x5445_5354,
        }
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a seed for a nested experiment unit (trial, sweep point, ...).
pub fn child_seed(seed: u64, domain: Domain, index: u64) -> u64 {
    mix64(mix64(seed ^ domain.tag()).wrapping_add(mix64(index)))
}

/// Open sub-stream `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ domain.tag().rotate_left(17)));
    rng.set_stream(index);
    rng
}

/// Stream index for cell `(i, j)` of a matrix with `cols` columns.
pub fn cell_index(i: usize, j: usize, cols: usize) -> u64 {
    (i * cols + j) as u64
}
