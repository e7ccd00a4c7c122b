//! Counter-based random streams.
//!
//! Every random decision is drawn from a ChaCha stream addressed by
//! `(seed, purpose, repetition, index)`; the ChaCha word position plays the
//! role of the per-stream draw counter. Results therefore do not depend on
//! how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u32)]
pub enum Purpose {
    RateEstimation = 1,
    Shot = 2,
    PecShot = 3,
    UnmitigatedShot = 4,
    SamplerDraw = 5,
    Cost = 6,
    Test = 7,
}

/// Stream for item `index` of `purpose` within `repetition`.
pub fn stream(seed: u64, purpose: Purpose, repetition: u32, index: u64) -> Stream {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&(purpose as u32).to_le_bytes());
    key[12..16].copy_from_slice(&repetition.to_le_bytes());
    key[16..24].copy_from_slice(&0x5eed_1e55_c0ff_ee00u64.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
