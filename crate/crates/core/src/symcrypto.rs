//! Classical symmetric primitives: a keyed function standing in for an
//! ideal random function, and the nonce-based SKE built on it.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use parking_lot::RwLock;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::Bits;
use crate::error::{Error, Result};

/// A keyed function `{0,1}^in → {0,1}^out`.
pub trait Prf: Send + Sync {
    fn input_len(&self) -> usize;
    fn output_len(&self) -> usize;
    fn eval(&self, x: &Bits) -> Result<Bits>;
}

/// Produces the keyed function for a key. This is the slot where a concrete
/// cipher can be plugged in instead of the ideal table.
pub trait PrfFamily: Send + Sync + fmt::Debug {
    fn instance(&self, key: &Bits, input_len: usize, output_len: usize) -> Arc<dyn Prf>;
}

/// Lazily populated random table. Entries are derived by hashing
/// `(key, input)`, so the table behaves as a fixed uniformly random function
/// per key and distinct keys get independent tables.
pub struct IdealPrf {
    key: [u8; 32],
    input_len: usize,
    output_len: usize,
    table: RwLock<HashMap<Bits, Bits>>,
}

impl IdealPrf {
    pub fn new(key: &Bits, input_len: usize, output_len: usize) -> Self {
        let key = crate::rng::derive_key(&[b"uclab/prf", &key.to_bytes(), &(key.len() as u64).to_le_bytes()]);
        IdealPrf { key, input_len, output_len, table: RwLock::new(HashMap::new()) }
    }

    fn derive(&self, x: &Bits) -> Bits {
        let mut out = Vec::with_capacity(self.output_len.div_ceil(8));
        let mut counter = 0u64;
        while out.len() * 8 < self.output_len {
            let mut h = Sha256::new();
            h.update(self.key);
            h.update((x.len() as u64).to_le_bytes());
            h.update(x.to_bytes());
            h.update((self.output_len as u64).to_le_bytes());
            h.update(counter.to_le_bytes());
            out.extend_from_slice(&h.finalize());
            counter += 1;
        }
        Bits::from_bytes(&out, self.output_len).expect("enough bytes")
    }
}

impl Prf for IdealPrf {
    fn input_len(&self) -> usize {
        self.input_len
    }

    fn output_len(&self) -> usize {
        self.output_len
    }

    fn eval(&self, x: &Bits) -> Result<Bits> {
        x.check_len(self.input_len)?;
        if let Some(y) = self.table.read().get(x) {
            return Ok(y.clone());
        }
        let y = self.derive(x);
        Ok(self.table.write().entry(x.clone()).or_insert(y).clone())
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct IdealPrfFamily;

impl PrfFamily for IdealPrfFamily {
    fn instance(&self, key: &Bits, input_len: usize, output_len: usize) -> Arc<dyn Prf> {
        Arc::new(IdealPrf::new(key, input_len, output_len))
    }
}

/// An explicit table, for exhaustive checks at toy sizes.
pub struct TablePrf {
    input_len: usize,
    output_len: usize,
    table: Vec<Bits>,
}

impl TablePrf {
    pub fn new(input_len: usize, output_len: usize, table: Vec<Bits>) -> Result<Self> {
        if table.len() != 1 << input_len {
            return Err(Error::Length { expected: 1 << input_len, got: table.len() });
        }
        for y in &table {
            y.check_len(output_len)?;
        }
        Ok(TablePrf { input_len, output_len, table })
    }
}

impl Prf for TablePrf {
    fn input_len(&self) -> usize {
        self.input_len
    }

    fn output_len(&self) -> usize {
        self.output_len
    }

    fn eval(&self, x: &Bits) -> Result<Bits> {
        x.check_len(self.input_len)?;
        Ok(self.table[x.to_u64() as usize].clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassicalCiphertext {
    pub nonce: Bits,
    pub body: Bits,
}

impl ClassicalCiphertext {
    pub fn to_bits(&self) -> Bits {
        self.nonce.concat(&self.body)
    }

    pub fn from_bits(bits: &Bits, lambda: usize) -> Result<Self> {
        if bits.len() < lambda {
            return Err(Error::Length { expected: lambda, got: bits.len() });
        }
        Ok(ClassicalCiphertext { nonce: bits.slice(0, lambda), body: bits.slice(lambda, bits.len()) })
    }

    pub fn len(&self) -> usize {
        self.nonce.len() + self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `Enc(k, m) = (r, F_k(r) ⊕ m)` with a fresh `λ`-bit nonce `r`.
#[derive(Clone, Debug)]
pub struct Ske {
    pub lambda: usize,
    pub msg_len: usize,
    pseudorandom: bool,
    family: Arc<dyn PrfFamily>,
}

impl Ske {
    pub fn new(lambda: usize, msg_len: usize) -> Result<Self> {
        Self::with_family(lambda, msg_len, Arc::new(IdealPrfFamily))
    }

    pub fn with_family(lambda: usize, msg_len: usize, family: Arc<dyn PrfFamily>) -> Result<Self> {
        if lambda == 0 || msg_len == 0 {
            return Err(Error::Config("SKE lengths must be positive".into()));
        }
        Ok(Ske { lambda, msg_len, pseudorandom: false, family })
    }

    /// The same construction, advertised as normal form with pseudorandom
    /// ciphertexts (which the nonce scheme already is under an ideal table).
    pub fn pseudorandom(lambda: usize, msg_len: usize) -> Result<Self> {
        let mut s = Self::new(lambda, msg_len)?;
        s.pseudorandom = true;
        Ok(s)
    }

    pub fn is_pseudorandom(&self) -> bool {
        self.pseudorandom
    }

    pub fn is_normal_form(&self) -> bool {
        self.pseudorandom
    }

    pub fn ct_len(&self) -> usize {
        self.lambda + self.msg_len
    }

    pub fn gen<R: Rng + ?Sized>(&self, rng: &mut R) -> Bits {
        Bits::random(self.lambda, rng)
    }

    fn prf(&self, key: &Bits) -> Result<Arc<dyn Prf>> {
        key.check_len(self.lambda)?;
        Ok(self.family.instance(key, self.lambda, self.msg_len))
    }

    pub fn enc<R: Rng + ?Sized>(&self, key: &Bits, m: &Bits, rng: &mut R) -> Result<ClassicalCiphertext> {
        m.check_len(self.msg_len)?;
        let nonce = Bits::random(self.lambda, rng);
        self.enc_with_nonce(key, m, nonce)
    }

    pub fn enc_with_nonce(&self, key: &Bits, m: &Bits, nonce: Bits) -> Result<ClassicalCiphertext> {
        m.check_len(self.msg_len)?;
        nonce.check_len(self.lambda)?;
        let pad = self.prf(key)?.eval(&nonce)?;
        Ok(ClassicalCiphertext { body: pad.xor(m)?, nonce })
    }

    pub fn dec(&self, key: &Bits, ct: &ClassicalCiphertext) -> Result<Bits> {
        ct.body.check_len(self.msg_len)?;
        let pad = self.prf(key)?.eval(&ct.nonce)?;
        pad.xor(&ct.body)
    }
}

/// Minimal classical scheme interface, used by the IND and PR games.
pub trait ClassicalScheme: Send + Sync {
    type Key: Clone + Send + Sync;
    fn msg_len(&self) -> usize;
    fn ct_len(&self) -> usize;
    fn gen(&self, rng: &mut dyn rand::RngCore) -> Self::Key;
    fn enc(&self, key: &Self::Key, m: &Bits, rng: &mut dyn rand::RngCore) -> Result<Bits>;
    fn dec(&self, key: &Self::Key, ct: &Bits) -> Result<Bits>;
}

impl ClassicalScheme for Ske {
    type Key = Bits;

    fn msg_len(&self) -> usize {
        self.msg_len
    }

    fn ct_len(&self) -> usize {
        Ske::ct_len(self)
    }

    fn gen(&self, rng: &mut dyn rand::RngCore) -> Bits {
        Ske::gen(self, rng)
    }

    fn enc(&self, key: &Bits, m: &Bits, rng: &mut dyn rand::RngCore) -> Result<Bits> {
        Ske::enc(self, key, m, rng).map(|c| c.to_bits())
    }

    fn dec(&self, key: &Bits, ct: &Bits) -> Result<Bits> {
        ct.check_len(Ske::ct_len(self))?;
        Ske::dec(self, key, &ClassicalCiphertext::from_bits(ct, self.lambda)?)
    }
}

/// Makes any scheme perfectly correct: if the inner ciphertext would not
/// decrypt to `m`, the message is sent in the clear behind a flag bit.
pub struct ClearFallback<S> {
    pub inner: S,
}

impl<S: ClassicalScheme> ClassicalScheme for ClearFallback<S> {
    type Key = S::Key;

    fn msg_len(&self) -> usize {
        self.inner.msg_len()
    }

    fn ct_len(&self) -> usize {
        1 + self.inner.ct_len().max(self.inner.msg_len())
    }

    fn gen(&self, rng: &mut dyn rand::RngCore) -> Self::Key {
        self.inner.gen(rng)
    }

    fn enc(&self, key: &Self::Key, m: &Bits, rng: &mut dyn rand::RngCore) -> Result<Bits> {
        let ct = self.inner.enc(key, m, rng)?;
        let width = self.ct_len() - 1;
        let (flag, payload) = match self.inner.dec(key, &ct) {
            Ok(ref back) if back == m => (false, ct),
            _ => (true, m.clone()),
        };
        let pad = Bits::zeros(width - payload.len());
        Ok(Bits::from_bools(vec![flag]).concat(&payload).concat(&pad))
    }

    fn dec(&self, key: &Self::Key, ct: &Bits) -> Result<Bits> {
        ct.check_len(self.ct_len())?;
        if ct.get(0) {
            Ok(ct.slice(1, 1 + self.inner.msg_len()))
        } else {
            self.inner.dec(key, &ct.slice(1, 1 + self.inner.ct_len()))
        }
    }
}

/// Union bound on a nonce collision among `q` encryptions.
pub fn nonce_collision_bound(q: u64, lambda: usize) -> f64 {
    (q as f64).powi(2) / 2f64.powi(lambda as i32)
}
