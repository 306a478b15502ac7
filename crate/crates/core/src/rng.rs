//! Counter-based random streams.
//!
//! Every draw is addressed by `(seed, path_index, step_index)` plus a running
//! counter inside the step, so a path can be regenerated on any thread in any
//! order and rejection loops (which consume a variable number of uniforms)
//! never shift the draws of later steps.

use rand::RngCore;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Key for one simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngContract {
    pub seed: u64,
    pub path_index: u64,
}

impl RngContract {
    pub fn new(seed: u64, path_index: u64) -> Self {
        Self { seed, path_index }
    }

    /// Generator for the draws of time step `step_index` of this path.
    #[inline]
    pub fn step(&self, step_index: u64) -> StepRng {
        let k = mix64(self.seed ^ 0x6a09_e667_f3bc_c909);
        let k = mix64(k ^ self.path_index.wrapping_mul(GOLDEN_GAMMA));
        let k = mix64(k ^ step_index.wrapping_mul(0xd1b5_4a32_d192_ed03));
        StepRng { key: k, counter: 0 }
    }

    /// Stream for auxiliary draws that are not tied to a time step
    /// (e.g. direction sampling in the geometry checks).
    pub fn aux(&self, channel: u64) -> StepRng {
        self.step(u64::MAX - channel)
    }
}

/// SplitMix64 stream keyed by a mixed `(seed, path, step)` triple.
#[derive(Debug, Clone)]
pub struct StepRng {
    key: u64,
    counter: u64,
}

impl StepRng {
    /// Number of 64-bit words drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }
}

impl RngCore for StepRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
