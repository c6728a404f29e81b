//! Seeded random substreams.
//!
//! Every random decision draws from a ChaCha8 stream whose key is the
//! SHA-256 of a master seed and a list of labels. Two streams with different
//! labels are independent, so the order in which substreams are consumed
//! never changes what any one of them produces.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// A label component of a substream key.
#[derive(Debug, Clone, Copy)]
pub enum Label<'a> {
    Str(&'a str),
    U64(u64),
}

impl<'a> From<&'a str> for Label<'a> {
    fn from(s: &'a str) -> Self {
        Label::Str(s)
    }
}

impl From<u64> for Label<'_> {
    fn from(v: u64) -> Self {
        Label::U64(v)
    }
}

pub fn substream_key(seed: u64, labels: &[Label<'_>]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"lnpath/v1");
    h.update(seed.to_le_bytes());
    for l in labels {
        match l {
            Label::Str(s) => {
                h.update([0x01]);
                h.update((s.len() as u64).to_le_bytes());
                h.update(s.as_bytes());
            }
            Label::U64(v) => {
                h.update([0x02]);
                h.update(v.to_le_bytes());
            }
        }
    }
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    key
}

pub fn substream(seed: u64, labels: &[Label<'_>]) -> StreamRng {
    ChaCha8Rng::from_seed(substream_key(seed, labels))
}
