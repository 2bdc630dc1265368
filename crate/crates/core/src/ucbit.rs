//! One-bit schemes used as the base of the compilers.
//!
//! The conjugate-coding candidate encrypts `b` under key `(θ, s)` as
//! `H^θ |x⟩` for a uniformly random `x` with `parity(x) = b ⊕ parity(s)`.
//! Its security is conjectural. The classical control fixes `θ = 0`, so the
//! ciphertext is a computational basis state and can be copied.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::qstate::{Apply, CVector, DensityMatrix, PureState, QuantumMemory, RegisterLayout, UnitaryOp, C64};
use crate::rng::Stream;
use crate::scheme::{Ciphertext, Scheme};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UcbitMode {
    ConjugateCoding,
    ClassicalControl,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UcbitKey {
    pub theta: Bits,
    pub s: Bits,
}

impl UcbitKey {
    /// The decryption key as a bit string, `θ ‖ s`.
    pub fn dk_bits(&self) -> Bits {
        self.theta.concat(&self.s)
    }

    pub fn from_dk_bits(bits: &Bits) -> Result<Self> {
        if !bits.len().is_multiple_of(2) || bits.is_empty() {
            return Err(Error::Length { expected: bits.len() + 1, got: bits.len() });
        }
        let n = bits.len() / 2;
        Ok(UcbitKey { theta: bits.slice(0, n), s: bits.slice(n, 2 * n) })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UcbitCt {
    pub qubits: Vec<String>,
}

impl Ciphertext for UcbitCt {
    fn registers(&self) -> Vec<String> {
        self.qubits.clone()
    }

    fn rename(&mut self, f: &dyn Fn(&str) -> String) {
        for q in &mut self.qubits {
            *q = f(q);
        }
    }
}

/// Shape of the decryption circuit, consumed when building the garbled
/// circuits of the expansion compiler: qubit `i` gets `H` iff classical
/// input `controls[i]` is 1, all qubits are measured, and the output is the
/// parity of the outcomes xor the parity of the classical inputs `pad_bits`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecoderShape {
    pub qubits: usize,
    pub classical: usize,
    pub controls: Vec<usize>,
    pub pad_bits: Vec<usize>,
}

/// A pure encoding `E|ek, m, 0⟩` with its registers split into the
/// ciphertext part `A` and the purifying part `B`.
#[derive(Clone, Debug)]
pub struct PureEncoding {
    pub state: PureState,
    pub a: Vec<String>,
    pub b: String,
}

pub const MAX_QUBITS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ucbit {
    pub n: usize,
    pub mode: UcbitMode,
}

impl Ucbit {
    pub fn new(n: usize, mode: UcbitMode) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Config(format!("ucbit size n = {n} outside 1..={MAX_QUBITS}")));
        }
        Ok(Ucbit { n, mode })
    }

    pub fn conjugate(n: usize) -> Result<Self> {
        Self::new(n, UcbitMode::ConjugateCoding)
    }

    pub fn classical_control(n: usize) -> Result<Self> {
        Self::new(n, UcbitMode::ClassicalControl)
    }

    /// Length of the decryption key bit string.
    pub fn dk_len(&self) -> usize {
        2 * self.n
    }

    /// Number of randomness bits (`ℓ_r`).
    pub fn randomness_len(&self) -> usize {
        self.n - 1
    }

    pub fn key_gen<R: Rng + ?Sized>(&self, rng: &mut R) -> UcbitKey {
        let theta = match self.mode {
            UcbitMode::ConjugateCoding => Bits::random(self.n, rng),
            UcbitMode::ClassicalControl => Bits::zeros(self.n),
        };
        UcbitKey { theta, s: Bits::random(self.n, rng) }
    }

    fn check_key(&self, key: &UcbitKey) -> Result<()> {
        key.theta.check_len(self.n)?;
        key.s.check_len(self.n)
    }

    /// The admissible string for randomness `r`: `r` followed by the bit
    /// that fixes `parity(x) = b ⊕ parity(s)`.
    pub fn plaintext_string(&self, key: &UcbitKey, b: bool, r: &Bits) -> Result<Bits> {
        r.check_len(self.randomness_len())?;
        let mut x = r.clone();
        x.push(r.parity() ^ b ^ key.s.parity());
        Ok(x)
    }

    /// `H^θ |x⟩` on qubits named `names`.
    pub fn encode_state(&self, key: &UcbitKey, x: &Bits, names: &[String]) -> Result<PureState> {
        let layout = RegisterLayout::qubits(names)?;
        let digits: Vec<usize> = x.iter().map(usize::from).collect();
        let mut psi = PureState::basis(layout, &digits)?;
        for (i, name) in names.iter().enumerate() {
            if key.theta.get(i) {
                psi = psi.apply(&UnitaryOp::h(), &[name.as_str()])?;
            }
        }
        Ok(psi)
    }

    /// The encryption channel's output: uniform mixture over admissible `x`.
    pub fn channel_state(&self, key: &UcbitKey, b: bool) -> Result<DensityMatrix> {
        self.check_key(key)?;
        let names = self.qubit_names("q");
        let count = 1u64 << self.randomness_len();
        let mut acc: Option<DensityMatrix> = None;
        for r in 0..count {
            let x = self.plaintext_string(key, b, &Bits::from_u64(r, self.randomness_len()))?;
            let rho = self.encode_state(key, &x, &names)?.to_density().scale(1.0 / count as f64);
            acc = Some(match acc {
                None => rho,
                Some(a) => a.add(&rho)?,
            });
        }
        Ok(acc.expect("at least one admissible string"))
    }

    /// `Σ_r 2^{-ℓ_r/2} H^θ|x(r)⟩_A |r⟩_B`, tracing `B` gives [`Ucbit::channel_state`].
    /// `B` is a single register of dimension `2^{max(ℓ_r, 1)}`.
    pub fn pure_encoding(&self, key: &UcbitKey, b: bool, tag: &str) -> Result<PureEncoding> {
        self.check_key(key)?;
        let a = self.qubit_names(tag);
        let b_name = format!("{tag}.purifier");
        let lr = self.randomness_len();
        let b_dim = 1usize << lr.max(1);
        let a_layout = RegisterLayout::qubits(&a)?;
        let layout = a_layout.concat(&RegisterLayout::single(&b_name, b_dim)?)?;
        let mut amps = CVector::zeros(layout.dim());
        let weight = C64::from((1.0 / (1u64 << lr) as f64).sqrt());
        for r in 0..(1u64 << lr) {
            let x = self.plaintext_string(key, b, &Bits::from_u64(r, lr))?;
            let psi = self.encode_state(key, &x, &a)?;
            for (i, amp) in psi.amplitudes().iter().enumerate() {
                amps[i * b_dim + r as usize] += amp * weight;
            }
        }
        Ok(PureEncoding { state: PureState::new(layout, amps)?, a, b: b_name })
    }

    fn qubit_names(&self, tag: &str) -> Vec<String> {
        (0..self.n).map(|i| format!("{tag}.q{i}")).collect()
    }

    /// Exact distribution of the decrypted bit on an arbitrary `n`-qubit state.
    pub fn dec_distribution_density(&self, key: &UcbitKey, rho: &DensityMatrix) -> Result<[f64; 2]> {
        self.check_key(key)?;
        if rho.dim() != 1 << self.n || rho.layout().len() != self.n {
            return Err(Error::DimensionMismatch { expected: 1 << self.n, got: rho.dim() });
        }
        let names: Vec<String> = rho.layout().names().map(String::from).collect();
        let mut rot = rho.clone();
        for (i, name) in names.iter().enumerate() {
            if key.theta.get(i) {
                rot = rot.apply(&UnitaryOp::h(), &[name.as_str()])?;
            }
        }
        let mut out = [0.0; 2];
        for (x, p) in rot.diagonal().into_iter().enumerate() {
            let parity = (x.count_ones() % 2 == 1) ^ key.s.parity();
            out[parity as usize] += p;
        }
        Ok(out)
    }

    pub fn decoder_shape(&self) -> DecoderShape {
        DecoderShape {
            qubits: self.n,
            classical: 2 * self.n,
            controls: (0..self.n).collect(),
            pad_bits: (self.n..2 * self.n).collect(),
        }
    }

    fn rotate(&self, key: &UcbitKey, ct: &UcbitCt, mem: &mut QuantumMemory) -> Result<()> {
        if ct.qubits.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: ct.qubits.len() });
        }
        for (i, q) in ct.qubits.iter().enumerate() {
            if key.theta.get(i) {
                mem.apply(&UnitaryOp::h(), &[q.as_str()])?;
            }
        }
        Ok(())
    }
}

impl Scheme for Ucbit {
    type Ek = UcbitKey;
    type Dk = UcbitKey;
    type Ct = UcbitCt;

    fn name(&self) -> String {
        match self.mode {
            UcbitMode::ConjugateCoding => "ucbit".into(),
            UcbitMode::ClassicalControl => "classical-control".into(),
        }
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "scheme": self.name(), "n": self.n })
    }

    fn message_len(&self) -> usize {
        1
    }

    fn is_normal_form(&self) -> bool {
        true
    }

    fn gen(&self, rng: &mut Stream) -> Result<(UcbitKey, UcbitKey)> {
        let k = self.key_gen(rng);
        Ok((k.clone(), k))
    }

    fn enc(&self, ek: &UcbitKey, m: &Bits, mem: &mut QuantumMemory, tag: &str, rng: &mut Stream) -> Result<UcbitCt> {
        self.check_key(ek)?;
        m.check_len(1)?;
        let r = Bits::random(self.randomness_len(), rng);
        let x = self.plaintext_string(ek, m.get(0), &r)?;
        let names = self.qubit_names(tag);
        for (i, name) in names.iter().enumerate() {
            let mut q = PureState::basis(RegisterLayout::qubits(&[name])?, &[x.get(i) as usize])?;
            if ek.theta.get(i) {
                q = q.apply(&UnitaryOp::h(), &[name.as_str()])?;
            }
            mem.insert(q)?;
        }
        Ok(UcbitCt { qubits: names })
    }

    fn dec(&self, dk: &UcbitKey, ct: &UcbitCt, mem: &mut QuantumMemory, rng: &mut Stream) -> Result<Bits> {
        self.check_key(dk)?;
        self.rotate(dk, ct, mem)?;
        let names: Vec<&str> = ct.qubits.iter().map(String::as_str).collect();
        let x = mem.measure(&names, rng)?;
        Ok(Bits::from_bools(vec![x.parity() ^ dk.s.parity()]))
    }

    fn dec_distribution(&self, dk: &UcbitKey, ct: &UcbitCt, mem: &QuantumMemory) -> Result<BTreeMap<Bits, f64>> {
        self.check_key(dk)?;
        let mut tmp = mem.clone();
        self.rotate(dk, ct, &mut tmp)?;
        let names: Vec<&str> = ct.qubits.iter().map(String::as_str).collect();
        let mut out = BTreeMap::new();
        for (x, p) in tmp.outcome_distribution(&names)? {
            *out.entry(Bits::from_bools(vec![x.parity() ^ dk.s.parity()])).or_insert(0.0) += p;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{partial_trace, trace_distance, CMatrix};
    use crate::scheme::success_probability;

    fn key(theta: &str, s: &str) -> UcbitKey {
        UcbitKey { theta: Bits::parse(theta).unwrap(), s: Bits::parse(s).unwrap() }
    }

    #[test]
    fn keys_are_reproducible_and_normal_form() {
        let u = Ucbit::conjugate(4).unwrap();
        let (ek, dk) = u.gen(&mut Stream::new(5)).unwrap();
        assert_eq!(ek, dk);
        assert_eq!(u.gen(&mut Stream::new(5)).unwrap().0, ek);
        assert_eq!(UcbitKey::from_dk_bits(&ek.dk_bits()).unwrap(), ek);
        assert!(Ucbit::conjugate(0).is_err());
    }

    #[test]
    fn theta_bits_are_fair() {
        let u = Ucbit::conjugate(4).unwrap();
        let trials = 10_000;
        let mut ones = [0usize; 4];
        for seed in 0..trials {
            let k = u.key_gen(&mut Stream::new(seed));
            for (i, c) in ones.iter_mut().enumerate() {
                *c += k.theta.get(i) as usize;
            }
        }
        let sigma = (0.25 / trials as f64).sqrt();
        for c in ones {
            assert!((c as f64 / trials as f64 - 0.5).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn single_qubit_examples() {
        let u = Ucbit::conjugate(1).unwrap();
        let names = vec!["q".to_string()];
        let x = u.plaintext_string(&key("0", "0"), true, &Bits::default()).unwrap();
        let psi = u.encode_state(&key("0", "0"), &x, &names).unwrap();
        assert!((psi.amplitudes()[1].re - 1.0).abs() < 1e-12);

        let x = u.plaintext_string(&key("1", "1"), false, &Bits::default()).unwrap();
        assert_eq!(x, Bits::parse("1").unwrap());
        let psi = u.encode_state(&key("1", "1"), &x, &names).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((psi.amplitudes()[0].re - s).abs() < 1e-12 && (psi.amplitudes()[1].re + s).abs() < 1e-12);
    }

    #[test]
    fn channel_state_matches_explicit_mixture() {
        let u = Ucbit::conjugate(3).unwrap();
        let k = key("101", "011");
        for b in [false, true] {
            let got = u.channel_state(&k, b).unwrap();
            // Oracle: build H^θ as a full 8×8 matrix and sum over admissible x.
            let h = UnitaryOp::h();
            let i2 = CMatrix::identity(2, 2);
            let factors = [h.matrix().clone(), i2, h.matrix().clone()];
            let ht = factors[0].kronecker(&factors[1]).kronecker(&factors[2]);
            let mut expected = CMatrix::zeros(8, 8);
            for x in 0..8usize {
                if ((x.count_ones() % 2 == 1) ^ k.s.parity()) == b {
                    let mut e = CVector::zeros(8);
                    e[x] = C64::from(1.0);
                    let v = &ht * e;
                    expected += &v * v.adjoint() * C64::from(0.25);
                }
            }
            assert!((got.matrix() - expected).iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn exact_correctness_for_small_n() {
        for n in 1..=4 {
            for mode in [UcbitMode::ConjugateCoding, UcbitMode::ClassicalControl] {
                let u = Ucbit::new(n, mode).unwrap();
                let mut rng = Stream::new(n as u64);
                for _ in 0..8 {
                    let (ek, dk) = u.gen(&mut rng).unwrap();
                    for b in [false, true] {
                        let m = Bits::from_bools(vec![b]);
                        let mut mem = QuantumMemory::new();
                        let ct = u.enc(&ek, &m, &mut mem, "c", &mut rng).unwrap();
                        assert!((success_probability(&u, &dk, &ct, &mem, &m).unwrap() - 1.0).abs() < 1e-9);
                        let p = u.dec_distribution_density(&dk, &u.channel_state(&ek, b).unwrap()).unwrap();
                        assert!((p[b as usize] - 1.0).abs() < 1e-9);
                        assert_eq!(u.dec(&dk, &ct, &mut mem, &mut rng).unwrap(), m);
                    }
                }
            }
        }
    }

    #[test]
    fn maximally_mixed_input_decrypts_uniformly() {
        let u = Ucbit::conjugate(3).unwrap();
        let rho = DensityMatrix::maximally_mixed(RegisterLayout::qubits(&["a", "b", "c"]).unwrap());
        let p = u.dec_distribution_density(&key("110", "100"), &rho).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pure_encoding_purifies_the_channel() {
        let u = Ucbit::conjugate(4).unwrap();
        let mut rng = Stream::new(51);
        for _ in 0..5 {
            let k = u.key_gen(&mut rng);
            for b in [false, true] {
                let enc = u.pure_encoding(&k, b, "c").unwrap();
                let names: Vec<&str> = enc.a.iter().map(String::as_str).collect();
                let red = partial_trace(&enc.state.to_density(), &names).unwrap();
                let ch = u.channel_state(&k, b).unwrap();
                let ch = DensityMatrix::new(red.layout().clone(), ch.into_matrix()).unwrap();
                assert!(trace_distance(&red, &ch).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn hiding_and_decodability() {
        // Averaged over all keys the two messages give the same state; with
        // the key they are perfectly distinguishable.
        for n in 1..=3 {
            let u = Ucbit::conjugate(n).unwrap();
            let mut avg = [None::<DensityMatrix>, None];
            for kv in 0..(1u64 << (2 * n)) {
                let k = UcbitKey::from_dk_bits(&Bits::from_u64(kv, 2 * n)).unwrap();
                let r0 = u.channel_state(&k, false).unwrap();
                let r1 = u.channel_state(&k, true).unwrap();
                assert!((trace_distance(&r0, &r1).unwrap() - 1.0).abs() < 1e-9);
                for (slot, r) in avg.iter_mut().zip([r0, r1]) {
                    *slot = Some(match slot.take() {
                        None => r,
                        Some(a) => a.add(&r).unwrap(),
                    });
                }
            }
            let [a0, a1] = avg;
            assert!(trace_distance(&a0.unwrap(), &a1.unwrap()).unwrap() < 1e-9);
        }
    }
}
