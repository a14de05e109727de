use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::Task;

/// Recorded in every dataset header so a reader can reproduce the stream.
pub const RNG_ID: &str =
    "chacha20 (rand_chacha 0.3) seed_from_u64(seed), stream = task << 56 | reseed << 48 | index";

/// Problem indices must fit below the reseed byte.
pub const MAX_INDEX: u64 = (1 << 48) - 1;

/// Independent generator for one problem. Every problem owns a stream, so
/// any partition of the index range into shards yields the same problems.
pub fn substream(seed: u64, task: Task, reseed: u8, index: u64) -> ChaCha20Rng {
    assert!(index <= MAX_INDEX, "problem index {index} exceeds 2^48 - 1");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((task.index() as u64) << 56 | (reseed as u64) << 48 | index);
    rng
}
