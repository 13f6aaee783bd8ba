//! Counter-based random substreams.
//!
//! Every Monte Carlo path owns a ChaCha stream addressed by `(seed, path)`, so
//! results do not depend on how paths are split across workers.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

/// Stream tags keep unrelated draws of the same path apart.
pub const STREAM_SYSTEMIC: u64 = 0;
pub const STREAM_IDIOSYNCRATIC: u64 = 1 << 40;
pub const STREAM_AUX: u64 = 2 << 40;

/// Independent generator for one path.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fill `out` with independent standard normal draws.
pub fn fill_normal(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = StandardNormal.sample(rng);
    }
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}
