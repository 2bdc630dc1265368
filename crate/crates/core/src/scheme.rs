//! The symmetric-encryption interface shared by the base schemes, the
//! compilers and the games.
//!
//! Quantum parts of a ciphertext live in a [`QuantumMemory`] owned by the
//! caller; the ciphertext value records which registers belong to it plus
//! any classical data. Encryption is a deterministic function of the
//! supplied stream, so replaying a stream reproduces the same pure state.

use std::collections::BTreeMap;
use std::fmt::Debug;

use crate::bits::Bits;
use crate::error::Result;
use crate::qstate::QuantumMemory;
use crate::rng::Stream;

pub trait Ciphertext: Clone + Debug + Send + Sync {
    /// Quantum registers referenced by this ciphertext.
    fn registers(&self) -> Vec<String>;
    /// Renames the referenced registers (the memory must be renamed alongside).
    fn rename(&mut self, f: &dyn Fn(&str) -> String);
}

pub trait Scheme: Send + Sync {
    type Ek: Clone + Debug + Send + Sync;
    type Dk: Clone + Debug + Send + Sync;
    type Ct: Ciphertext;

    fn name(&self) -> String;
    fn describe(&self) -> serde_json::Value;
    fn message_len(&self) -> usize;
    fn is_normal_form(&self) -> bool;

    /// Whether `enc` is of the form `E_ek |m, r, 0⟩` with all randomness drawn
    /// from the stream, so that replaying the stream yields identical copies.
    fn is_pure(&self) -> bool {
        true
    }

    fn gen(&self, rng: &mut Stream) -> Result<(Self::Ek, Self::Dk)>;

    /// Encrypts into fresh registers whose names start with `tag`.
    fn enc(&self, ek: &Self::Ek, m: &Bits, mem: &mut QuantumMemory, tag: &str, rng: &mut Stream) -> Result<Self::Ct>;

    /// Runs decryption, consuming (measuring) the ciphertext registers.
    fn dec(&self, dk: &Self::Dk, ct: &Self::Ct, mem: &mut QuantumMemory, rng: &mut Stream) -> Result<Bits>;

    /// Exact output distribution of `dec`, leaving `mem` untouched.
    fn dec_distribution(&self, dk: &Self::Dk, ct: &Self::Ct, mem: &QuantumMemory) -> Result<BTreeMap<Bits, f64>>;
}

/// Probability that `dec` returns `m`, computed exactly.
pub fn success_probability<S: Scheme>(
    scheme: &S,
    dk: &S::Dk,
    ct: &S::Ct,
    mem: &QuantumMemory,
    m: &Bits,
) -> Result<f64> {
    Ok(scheme.dec_distribution(dk, ct, mem)?.get(m).copied().unwrap_or(0.0))
}

/// Messages of length `len` in counting order.
pub fn all_messages(len: usize) -> impl Iterator<Item = Bits> {
    (0..1u64 << len).map(move |v| Bits::from_u64(v, len))
}
