//! Seed derivation and the Gaussian variate stream used by synthesis.
//!
//! Outputs must be bit-identical across platforms and releases: traces are
//! regenerated from (seed, parameters) alone, so the whole chain below is
//! frozen. SplitMix64 expands a 64-bit seed into the ChaCha12 key, and
//! Box-Muller converts the ChaCha word stream into normals.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// One SplitMix64 step: advance `state` by the golden-ratio increment and
/// return the avalanche-mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic sub-seed for component or replica `index` under a master
/// seed. Distinct indices give independent streams; identical inputs give
/// identical sub-seeds on every platform.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut state = master ^ index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA);
    splitmix64(&mut state)
}

/// Standard-normal stream: ChaCha12 keyed from the seed via SplitMix64,
/// transformed with Box-Muller. The second variate of each pair is cached,
/// never discarded, so the draw sequence is a pure function of the seed.
pub struct GaussianSource {
    rng: ChaCha12Rng,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new(seed: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        GaussianSource {
            rng: ChaCha12Rng::from_seed(key),
            spare: None,
        }
    }

    /// Uniform draw on (0, 1]; the +1 offset keeps log() finite without a
    /// rejection loop that would make the draw count data-dependent.
    fn next_unit(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_unit();
        let u2 = self.next_unit();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn fill_gaussian(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.next_gaussian();
        }
    }
}
