//! Counter-based random streams: one ChaCha stream per (seed, channel,
//! path), so any path can be replayed alone and results do not depend on
//! how paths are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CH_BM: u64 = 1;
pub const CH_UNIFORM: u64 = 2;
pub const CH_AUX: u64 = 3;
pub const CH_BM3: u64 = 4;
const CH_BRIDGE_BASE: u64 = 1 << 32;

/// Channel of the k-th independent bridge driver.
pub fn bridge_channel(k: u64) -> u64 {
    CH_BRIDGE_BASE + k
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, channel: u64, path: u64) -> ChaCha8Rng {
    let mut state = seed ^ channel.wrapping_mul(0xD1B5_4A32_D192_ED03);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(path);
    rng
}
