use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type Rng = ChaCha20Rng;

/// Stream used for the samples that size the vertex box.
pub const VERTEX_STREAM: u64 = u64::MAX;

/// Stream for noise scenarios built into a program, e.g. sampled objectives.
pub const SCENARIO_STREAM: u64 = u64::MAX - 1;

/// Independent generator for `(seed, stream)`. Stream 0 is reserved for the
/// primary noise draw of a call; Monte Carlo chunk `c` uses stream `c + 1`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}
