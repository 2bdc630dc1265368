//! Seeded, splittable randomness.
//!
//! Every random choice in the crate is drawn from a [`Stream`]. A stream is a
//! ChaCha20 generator whose key is derived from a 32-byte seed; substreams are
//! derived by hashing the parent seed with a label, so the substream for a
//! given label does not depend on how much of the parent was consumed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug)]
pub struct Stream {
    seed: [u8; 32],
    rng: ChaCha20Rng,
}

impl Stream {
    pub fn new(master_seed: u64) -> Self {
        Self::from_key(derive_key(&[b"uclab/master", &master_seed.to_le_bytes()]))
    }

    /// Stream determined by `key` within the domain `domain`.
    pub fn keyed(domain: &str, key: &[u8]) -> Self {
        Self::from_key(derive_key(&[b"uclab/keyed", domain.as_bytes(), key]))
    }

    fn from_key(seed: [u8; 32]) -> Self {
        Stream { seed, rng: ChaCha20Rng::from_seed(seed) }
    }

    /// Deterministic child stream identified by `label`.
    pub fn substream(&self, label: &str, index: u64) -> Stream {
        Self::from_key(derive_key(&[&self.seed, label.as_bytes(), &index.to_le_bytes()]))
    }

    /// A child stream keyed by fresh output of this stream.
    pub fn fork(&mut self) -> Stream {
        let mut seed = [0u8; 32];
        self.rng.fill_bytes(&mut seed);
        Self::from_key(seed)
    }

    pub fn seed_bytes(&self) -> [u8; 32] {
        self.seed
    }
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

pub(crate) fn derive_key(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}
