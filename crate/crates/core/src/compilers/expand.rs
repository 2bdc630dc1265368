//! Plaintext expansion: a garbled constant circuit `C[m]` whose classical
//! labels for the bits of `dk¹` are hidden in a grid of SKE ciphertexts.

use std::collections::BTreeMap;

use serde::Serialize;

use super::constant_circuit;
use crate::bits::Bits;
use crate::dqre::{Dqre, HybridCircuit, YaoDqre};
use crate::error::{Error, Result};
use crate::qstate::QuantumMemory;
use crate::rng::Stream;
use crate::scheme::{Ciphertext, Scheme};
use crate::symcrypto::{ClassicalCiphertext, Ske};
use crate::ucbit::{Ucbit, UcbitKey};

/// `ek = ({ek_{i,b}}, dk¹)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExpandedEk {
    pub grid: Vec<[Bits; 2]>,
    pub dk1: UcbitKey,
}

/// `(k_{1,dk¹_1}, …, k_{ℓ,dk¹_ℓ}, dk¹)`: the decryption key of the expanded
/// scheme and the single key of the normal-form scheme.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SelectedKey {
    pub keys: Vec<Bits>,
    pub dk1: UcbitKey,
}

impl ExpandedEk {
    pub fn decryption_key(&self) -> SelectedKey {
        let bits = self.dk1.dk_bits();
        let keys = self.grid.iter().enumerate().map(|(i, pair)| pair[bits.get(i) as usize].clone()).collect();
        SelectedKey { keys, dk1: self.dk1.clone() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpandedCt<E> {
    pub encoded: E,
    /// Registers holding the quantum labels.
    pub inputs: Vec<String>,
    pub grid: Vec<[ClassicalCiphertext; 2]>,
}

impl<E: Ciphertext> Ciphertext for ExpandedCt<E> {
    fn registers(&self) -> Vec<String> {
        let mut r = self.encoded.registers();
        r.extend(self.inputs.iter().cloned());
        r
    }

    fn rename(&mut self, f: &dyn Fn(&str) -> String) {
        self.encoded.rename(f);
        for q in &mut self.inputs {
            *q = f(q);
        }
    }
}

/// Shared machinery of the expanded and normal-form schemes, also used by
/// the reduction to build ciphertexts without `dk¹`.
#[derive(Clone, Debug)]
pub struct GridCore<D> {
    pub base: Ucbit,
    pub ske: Ske,
    pub dqre: D,
    pub msg_len: usize,
}

impl<D: Dqre> GridCore<D> {
    pub fn new(base: Ucbit, ske: Ske, dqre: D, msg_len: usize) -> Result<Self> {
        if msg_len == 0 {
            return Err(Error::Config("message length must be positive".into()));
        }
        if ske.msg_len != dqre.label_len() {
            return Err(Error::Config(format!(
                "SKE message length {} differs from the label length {}",
                ske.msg_len,
                dqre.label_len()
            )));
        }
        Ok(GridCore { base, ske, dqre, msg_len })
    }

    /// `ℓ = ℓ¹_dk`.
    pub fn grid_len(&self) -> usize {
        self.base.dk_len()
    }

    /// Garbles `circuit`, labels the quantum inputs and fills the grid with
    /// `entry(i, b, lab_{i,b})`. Without `inputs`, fresh `|0⟩` qubits are used.
    pub fn encrypt_circuit(
        &self,
        circuit: &HybridCircuit,
        inputs: Option<&[String]>,
        entry: &mut dyn FnMut(usize, bool, Bits, &mut Stream) -> Result<ClassicalCiphertext>,
        mem: &mut QuantumMemory,
        tag: &str,
        rng: &mut Stream,
    ) -> Result<ExpandedCt<D::Encoded>> {
        let (encoded, r) = self.dqre.encode(circuit, mem, &format!("{tag}.c"), rng)?;
        let inputs: Vec<String> = match inputs {
            Some(names) => names.to_vec(),
            None => {
                let names: Vec<String> = (0..circuit.lq).map(|i| format!("{tag}.in{i}")).collect();
                for q in &names {
                    mem.prepare_qubit(q, false)?;
                }
                names
            }
        };
        for (i, q) in inputs.iter().enumerate() {
            self.dqre.label_q(i, q, mem, &r)?;
        }
        let mut grid = Vec::with_capacity(circuit.lc);
        for i in 0..circuit.lc {
            let l0 = self.dqre.label_c(i, false, &r)?;
            let l1 = self.dqre.label_c(i, true, &r)?;
            grid.push([entry(i, false, l0, rng)?, entry(i, true, l1, rng)?]);
        }
        Ok(ExpandedCt { encoded, inputs, grid })
    }

    /// `Enc` with the selected-label rule: `ct_{i,dk¹_i}` encrypts the label
    /// and the other entry is produced by `unselected`.
    #[allow(clippy::too_many_arguments)]
    fn encrypt_selected(
        &self,
        m: &Bits,
        dk1: &UcbitKey,
        selected_key: &dyn Fn(usize) -> Bits,
        unselected: &dyn Fn(usize, &mut Stream) -> Result<ClassicalCiphertext>,
        mem: &mut QuantumMemory,
        tag: &str,
        rng: &mut Stream,
    ) -> Result<ExpandedCt<D::Encoded>> {
        m.check_len(self.msg_len)?;
        let bits = dk1.dk_bits();
        bits.check_len(self.grid_len())?;
        let circuit = constant_circuit(&self.base.decoder_shape(), m)?;
        let mut entry = |i: usize, b: bool, label: Bits, rng: &mut Stream| {
            if b == bits.get(i) {
                self.ske.enc(&selected_key(i), &label, rng)
            } else {
                unselected(i, rng)
            }
        };
        self.encrypt_circuit(&circuit, None, &mut entry, mem, tag, rng)
    }

    /// Recovers the selected classical labels.
    pub fn labels(&self, dk: &SelectedKey, ct: &ExpandedCt<D::Encoded>) -> Result<Vec<Bits>> {
        let bits = dk.dk1.dk_bits();
        if ct.grid.len() != bits.len() || dk.keys.len() != bits.len() {
            return Err(Error::Length { expected: bits.len(), got: ct.grid.len() });
        }
        (0..bits.len()).map(|i| self.ske.dec(&dk.keys[i], &ct.grid[i][bits.get(i) as usize])).collect()
    }

    pub fn decrypt(&self, dk: &SelectedKey, ct: &ExpandedCt<D::Encoded>, mem: &mut QuantumMemory, rng: &mut Stream) -> Result<Bits> {
        let labels = self.labels(dk, ct)?;
        self.dqre.eval(&ct.encoded, &ct.inputs, &labels, mem, rng)
    }

    pub fn decrypt_distribution(&self, dk: &SelectedKey, ct: &ExpandedCt<D::Encoded>, mem: &QuantumMemory) -> Result<BTreeMap<Bits, f64>> {
        let labels = self.labels(dk, ct)?;
        self.dqre.eval_distribution(&ct.encoded, &ct.inputs, &labels, mem)
    }

    fn describe(&self, compiler: &str) -> serde_json::Value {
        serde_json::json!({
            "compiler": compiler,
            "base": { "scheme": self.base.name(), "n": self.base.n },
            "ske": { "lambda": self.ske.lambda, "pseudorandom": self.ske.is_pseudorandom() },
            "dqre": self.dqre.name(),
            "message_len": self.msg_len,
        })
    }
}

/// The expanded scheme for `ℓ_m`-bit messages.
#[derive(Clone, Debug)]
pub struct Expanded<D = YaoDqre> {
    pub core: GridCore<D>,
}

impl Expanded<YaoDqre> {
    pub fn yao(base: Ucbit, lambda: usize, msg_len: usize) -> Result<Self> {
        let dqre = YaoDqre { lambda };
        let ske = Ske::new(lambda, dqre.label_len())?;
        Ok(Expanded { core: GridCore::new(base, ske, dqre, msg_len)? })
    }
}

impl<D: Dqre> Expanded<D> {
    pub fn new(core: GridCore<D>) -> Self {
        Expanded { core }
    }
}

impl<D: Dqre> Scheme for Expanded<D> {
    type Ek = ExpandedEk;
    type Dk = SelectedKey;
    type Ct = ExpandedCt<D::Encoded>;

    fn name(&self) -> String {
        format!("expand({})", self.core.base.name())
    }

    fn describe(&self) -> serde_json::Value {
        self.core.describe("expand")
    }

    fn message_len(&self) -> usize {
        self.core.msg_len
    }

    fn is_normal_form(&self) -> bool {
        false
    }

    fn gen(&self, rng: &mut Stream) -> Result<(ExpandedEk, SelectedKey)> {
        let dk1 = self.core.base.key_gen(rng);
        let grid = (0..self.core.grid_len()).map(|_| [self.core.ske.gen(rng), self.core.ske.gen(rng)]).collect();
        let ek = ExpandedEk { grid, dk1 };
        let dk = ek.decryption_key();
        Ok((ek, dk))
    }

    fn enc(&self, ek: &ExpandedEk, m: &Bits, mem: &mut QuantumMemory, tag: &str, rng: &mut Stream) -> Result<Self::Ct> {
        let bits = ek.dk1.dk_bits();
        let zeros = Bits::zeros(self.core.ske.msg_len);
        let selected = |i: usize| ek.grid[i][bits.get(i) as usize].clone();
        let unselected = |i: usize, rng: &mut Stream| self.core.ske.enc(&ek.grid[i][!bits.get(i) as usize], &zeros, rng);
        if ek.grid.len() != self.core.grid_len() {
            return Err(Error::Length { expected: self.core.grid_len(), got: ek.grid.len() });
        }
        self.core.encrypt_selected(m, &ek.dk1, &selected, &unselected, mem, tag, rng)
    }

    fn dec(&self, dk: &SelectedKey, ct: &Self::Ct, mem: &mut QuantumMemory, rng: &mut Stream) -> Result<Bits> {
        self.core.decrypt(dk, ct, mem, rng)
    }

    fn dec_distribution(&self, dk: &SelectedKey, ct: &Self::Ct, mem: &QuantumMemory) -> Result<BTreeMap<Bits, f64>> {
        self.core.decrypt_distribution(dk, ct, mem)
    }
}

/// The normal-form variant: one key, unselected grid entries uniformly random.
#[derive(Clone, Debug)]
pub struct NormalForm<D = YaoDqre> {
    pub core: GridCore<D>,
}

impl NormalForm<YaoDqre> {
    pub fn yao(base: Ucbit, lambda: usize, msg_len: usize) -> Result<Self> {
        let dqre = YaoDqre { lambda };
        let ske = Ske::pseudorandom(lambda, dqre.label_len())?;
        Self::new(GridCore::new(base, ske, dqre, msg_len)?)
    }
}

impl<D: Dqre> NormalForm<D> {
    pub fn new(core: GridCore<D>) -> Result<Self> {
        if !core.ske.is_normal_form() || !core.ske.is_pseudorandom() {
            return Err(Error::Config("the normal-form compiler needs a normal-form SKE with pseudorandom ciphertexts".into()));
        }
        Ok(NormalForm { core })
    }
}

impl<D: Dqre> Scheme for NormalForm<D> {
    type Ek = SelectedKey;
    type Dk = SelectedKey;
    type Ct = ExpandedCt<D::Encoded>;

    fn name(&self) -> String {
        format!("nf({})", self.core.base.name())
    }

    fn describe(&self) -> serde_json::Value {
        self.core.describe("nf")
    }

    fn message_len(&self) -> usize {
        self.core.msg_len
    }

    fn is_normal_form(&self) -> bool {
        true
    }

    fn gen(&self, rng: &mut Stream) -> Result<(SelectedKey, SelectedKey)> {
        let dk1 = self.core.base.key_gen(rng);
        let keys = (0..self.core.grid_len()).map(|_| self.core.ske.gen(rng)).collect();
        let sk = SelectedKey { keys, dk1 };
        Ok((sk.clone(), sk))
    }

    fn enc(&self, sk: &SelectedKey, m: &Bits, mem: &mut QuantumMemory, tag: &str, rng: &mut Stream) -> Result<Self::Ct> {
        if sk.keys.len() != self.core.grid_len() {
            return Err(Error::Length { expected: self.core.grid_len(), got: sk.keys.len() });
        }
        let lambda = self.core.ske.lambda;
        let ct_len = self.core.ske.ct_len();
        let selected = |i: usize| sk.keys[i].clone();
        let unselected = |_: usize, rng: &mut Stream| ClassicalCiphertext::from_bits(&Bits::random(ct_len, rng), lambda);
        self.core.encrypt_selected(m, &sk.dk1, &selected, &unselected, mem, tag, rng)
    }

    fn dec(&self, dk: &SelectedKey, ct: &Self::Ct, mem: &mut QuantumMemory, rng: &mut Stream) -> Result<Bits> {
        self.core.decrypt(dk, ct, mem, rng)
    }

    fn dec_distribution(&self, dk: &SelectedKey, ct: &Self::Ct, mem: &QuantumMemory) -> Result<BTreeMap<Bits, f64>> {
        self.core.decrypt_distribution(dk, ct, mem)
    }
}
