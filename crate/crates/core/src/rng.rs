//! Deterministic random substreams.
//!
//! Each generated entity (a document, the benchmark query, one planted
//! instance) draws from its own ChaCha12 stream:
//!
//! ```text
//! key    = SplitMix64(master) x 4, each word little-endian
//! stream = (kind << 56) | index
//! ```
//!
//! A stream depends only on `(master, kind, index)`, never on how many
//! other entities were drawn or on which thread drew them. This derivation is
//! part of the output contract: changing it changes every benchmark number.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Entity kinds that own a substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamKind {
    Document = 1,
    Query = 2,
    Spike = 3,
}

const INDEX_BITS: u32 = 56;

/// The generator for entity `index` of `kind` under `master`.
pub fn substream(master: u64, kind: StreamKind, index: u64) -> ChaCha12Rng {
    assert!(index < 1 << INDEX_BITS, "substream index {index} out of range");
    let mut state = master;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream((u64::from(kind as u8) << INDEX_BITS) | index);
    rng
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
