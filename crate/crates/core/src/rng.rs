//! Deterministic random streams.
//!
//! Every stream in the lab is a ChaCha8 generator whose 256-bit key is the
//! first four outputs of SplitMix64 started at a 64-bit seed (little-endian
//! words). Child seeds are derived from a parent seed, a [`Stream`] tag and
//! an index, so any single session or subject can be regenerated on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The one generator used everywhere in the lab.
pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 step. Advances `state` and returns the mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Builds the simulation generator for `seed`.
pub fn rng_from_seed(seed: u64) -> SimRng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    SimRng::from_seed(key)
}

/// Named sub-streams. The tag values are part of the reproducibility
/// contract and must not be renumbered.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Fundamental,
    BackgroundFlow,
    Controller,
    Cohort,
    Subject,
    Behavior,
    Split,
    Session,
}

impl Stream {
    pub const fn tag(self) -> u64 {
        match self {
            Stream::Fundamental => 1,
            Stream::BackgroundFlow => 2,
            Stream::Controller => 3,
            Stream::Cohort => 4,
            Stream::Subject => 5,
            Stream::Behavior => 6,
            Stream::Split => 7,
            Stream::Session => 8,
        }
    }
}

/// Derives the seed of child `index` of `stream` under `parent`.
pub fn derive_seed(parent: u64, stream: Stream, index: u64) -> u64 {
    let mut state = parent ^ stream.tag().wrapping_mul(GOLDEN_GAMMA);
    let first = splitmix64(&mut state);
    let mut state = first ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    splitmix64(&mut state)
}
