//! Seedable uniform random stream.
//!
//! Every consumer in the crate draws uniforms through [`RandomStream`], one
//! 64-bit word pair per draw, so the stream position is an exact count of
//! the draws made so far.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream id used for the learning loop itself.
pub const STREAM_LEARNER: u64 = 0;
/// Stream id used to sample the hidden state of a trial.
pub const STREAM_HIDDEN_STATE: u64 = 1;
/// Stream id used to sample static plate imperfections.
pub const STREAM_PLATE_ERRORS: u64 = 2;

/// SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` within a batch seeded by `master_seed`.
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    mix64(master_seed ^ index)
}

/// A reproducible source of uniform variates on `[0, 1)`.
#[derive(Clone, Debug)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, STREAM_LEARNER)
    }

    /// An independent stream for the same seed. Distinct `stream` ids never
    /// overlap.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Number of uniforms drawn since construction.
    pub fn draws(&self) -> u64 {
        (self.rng.get_word_pos() / 2) as u64
    }
}
