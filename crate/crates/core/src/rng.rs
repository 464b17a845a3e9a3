//! Counter-based random streams keyed by `(seed, stream, index)`.
//!
//! Every draw is addressed by position, so results do not depend on
//! traversal order or on how work is split across threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Number of 32-bit words reserved for one keyed draw.
pub const WORDS_PER_DRAW: u128 = 4;

/// Generator positioned at draw `index` of `stream` under `seed`.
pub fn keyed(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(index as u128 * WORDS_PER_DRAW);
    rng
}

/// Sequential reader that advances exactly one draw slot per call.
pub struct DrawStream {
    rng: ChaCha8Rng,
}

impl DrawStream {
    pub fn new(seed: u64, stream: u64, start: u64) -> Self {
        Self { rng: keyed(seed, stream, start) }
    }

    /// Two uniforms in (0,1) consuming one full draw slot.
    pub fn uniform_pair(&mut self) -> (f64, f64) {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        (open_unit(a), open_unit(b))
    }

    /// Standard normal via Box–Muller, one slot per value.
    pub fn normal(&mut self) -> f64 {
        let (u, v) = self.uniform_pair();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in [0,1) at a keyed position, for one-off use.
pub fn keyed_uniform(seed: u64, stream: u64, index: u64) -> f64 {
    keyed(seed, stream, index).random::<f64>()
}
