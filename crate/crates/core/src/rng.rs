//! Deterministic random substreams.
//!
//! Every random draw in the crate comes from
//! `substream(root_seed, task, index)`: the task label is hashed (FNV-1a)
//! and mixed with the root seed through SplitMix64 to seed a ChaCha8
//! generator, and the realization or trajectory index selects the ChaCha
//! stream. The result does not depend on which worker runs the task.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for a named task under a root seed.
pub fn task_seed(root: u64, task: &str) -> u64 {
    splitmix64(root ^ splitmix64(fnv1a(task)))
}

/// Generator for (root, task, index).
pub fn substream(root: u64, task: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(task_seed(root, task));
    rng.set_stream(index);
    rng
}
