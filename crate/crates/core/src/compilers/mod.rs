//! Compilers built on a one-bit scheme: plaintext expansion, its normal-form
//! pseudorandom variant, and the identical-copy compiler.

pub mod expand;
pub mod idcopy;
pub mod pru;

pub use expand::{ExpandedCt, ExpandedEk, Expanded, GridCore, NormalForm, SelectedKey};
pub use idcopy::{IdCopy, IdCopyCt, IdCopySingle};
pub use pru::{PruFamily, PruMode};

use crate::bits::Bits;
use crate::dqre::{BoolCircuit, Clifford1, HybridCircuit};
use crate::error::{Error, Result};
use crate::ucbit::DecoderShape;

/// Gates in the postprocessing of a decoder circuit for `msg_len`-bit messages.
pub fn canonical_size(shape: &DecoderShape, msg_len: usize) -> usize {
    let parity = shape.qubits.saturating_sub(1) + shape.pad_bits.len();
    parity + 3 * msg_len
}

/// The circuit that decodes the base ciphertext to a bit `b` and outputs
/// `m_b`. With `decode = false` the gate slots hold identities; together with
/// `m0 = m1` this gives the constant circuit in the same shape.
fn decoder_circuit(shape: &DecoderShape, m0: &Bits, m1: &Bits, decode: bool) -> Result<HybridCircuit> {
    if m0.len() != m1.len() || m0.is_empty() {
        return Err(Error::Length { expected: m0.len().max(1), got: m1.len() });
    }
    let (lq, lc) = (shape.qubits, shape.classical);
    let mut f = BoolCircuit::new(lq + lc);
    let c0: Vec<usize> = m0.iter().map(|v| f.constant(v)).collect();
    let c1: Vec<usize> = m1.iter().map(|v| f.constant(v)).collect();
    let mut acc = 0;
    for i in 1..lq {
        acc = f.xor(acc, i);
    }
    for &p in &shape.pad_bits {
        acc = f.xor(acc, lq + p);
    }
    let mut outputs = Vec::with_capacity(m0.len());
    for (&a, &b) in c0.iter().zip(&c1) {
        let diff = f.xor(a, b);
        let sel = f.and(acc, diff);
        outputs.push(f.xor(a, sel));
    }
    f.outputs = outputs;
    f.pad_to(canonical_size(shape, m0.len()))?;
    let gate = if decode { [Clifford1::I, Clifford1::H] } else { [Clifford1::I, Clifford1::I] };
    let c = HybridCircuit { lq, lc, controls: shape.controls.clone(), gates: vec![gate; lq], f };
    c.validate()?;
    Ok(c)
}

/// `C[m]`: ignores its inputs and outputs `m`.
pub fn constant_circuit(shape: &DecoderShape, m: &Bits) -> Result<HybridCircuit> {
    decoder_circuit(shape, m, m, false)
}

/// `D[m0, m1]`: decrypts the base ciphertext with the classical inputs as key
/// and outputs `m_b`.
pub fn select_circuit(shape: &DecoderShape, m0: &Bits, m1: &Bits) -> Result<HybridCircuit> {
    decoder_circuit(shape, m0, m1, true)
}
