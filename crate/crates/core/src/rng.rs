//! Reproducible parallel randomness: path k draws from ChaCha stream k of a
//! seeded counter-based generator, so the numbers a path sees are a pure
//! function of (seed, path_index) and never depend on worker scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}
