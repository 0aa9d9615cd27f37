//! Deterministic, splittable random-number streams.
//!
//! Every Monte Carlo entry point takes a single `u64` seed. Work is divided
//! into a fixed number of blocks (independent of the worker-thread count) and
//! each block draws from its own ChaCha stream, so results are bit-identical
//! no matter how the blocks are scheduled.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of trajectory blocks used by the parallel Monte Carlo drivers.
///
/// Fixed so that the block -> stream assignment, and therefore every sampled
/// number, is independent of how many threads happen to run the blocks.
pub const TRAJECTORY_BLOCKS: usize = 64;

/// SplitMix64 step, used to expand seeds and to derive sub-seeds.
#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed, e.g. one per sweep cell.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut state = seed ^ tag.wrapping_mul(0xa076_1d64_78bd_642f);
    let a = splitmix64(&mut state);
    splitmix64(&mut state) ^ a.rotate_left(17)
}

/// Returns the RNG for one trajectory block of the given master seed.
///
/// All blocks share a key expanded from the seed and select disjoint ChaCha
/// streams by index, so any subset of blocks can be generated independently.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(block);
    rng
}

/// Splits `total` items into `blocks` contiguous ranges covering 0..total.
pub fn block_ranges(total: usize, blocks: usize) -> Vec<std::ops::Range<usize>> {
    let base = total / blocks;
    let extra = total % blocks;
    let mut out = Vec::with_capacity(blocks);
    let mut start = 0;
    for b in 0..blocks {
        let len = base + usize::from(b < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}
