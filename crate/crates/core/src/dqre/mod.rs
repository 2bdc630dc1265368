//! Decomposable randomized encodings.
//!
//! [`garble`] is a Yao point-and-permute garbling scheme for Boolean
//! circuits. This module lifts it to [`HybridCircuit`]s: each input qubit is
//! one-time padded, teleported through a Pauli-padded resource pair carrying
//! the gate for its control value, and measured; a garbled circuit removes
//! the accumulated Pauli frame and runs the classical postprocessing.

pub mod garble;
pub mod hybrid;
pub mod indist;

use std::collections::BTreeMap;
use std::fmt::Debug;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use garble::{dre_eval, dre_garble, dre_label, dre_simulate, BoolCircuit, GarbleRandomness, GarbledCircuit, Label, Topology};
pub use hybrid::{total_variation, Clifford1, HybridCircuit, HybridShape};

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::qstate::{CqState, PureState, QuantumMemory, RegisterLayout, UnitaryOp, CVector, C64};
use crate::rng::Stream;
use crate::scheme::Ciphertext;

/// Pauli keys of one branch resource: `X^{a1}Z^{b1}` on the half the input is
/// teleported into, `X^{a2}Z^{b2}` on the half that is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchKeys {
    pub a1: bool,
    pub b1: bool,
    pub a2: bool,
    pub b2: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitKeys {
    /// Input pad `X^a Z^b` applied by the quantum label.
    pub a: bool,
    pub b: bool,
    /// Indexed by control value.
    pub branch: [BranchKeys; 2],
}

impl QubitKeys {
    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut bk = || BranchKeys { a1: rng.random(), b1: rng.random(), a2: rng.random(), b2: rng.random() };
        let branch = [bk(), bk()];
        QubitKeys { a: rng.random(), b: rng.random(), branch }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DqreRandomness {
    pub lambda: usize,
    pub garble: GarbleRandomness,
    pub keys: Vec<QubitKeys>,
}

impl DqreRandomness {
    /// Resource slot that holds the branch for control value `c` of qubit `i`'s
    /// control wire: slots are permuted by the wire's 0-label point bit.
    fn slot(&self, control: usize, c: bool) -> Result<usize> {
        Ok((self.garble.label(control, false)?.point ^ c) as usize)
    }
}

/// `Ĉ`: the garbled postprocessing, both labels of every evaluator-generated
/// outcome wire, and the names of the resource registers in memory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedCircuit {
    pub lq: usize,
    pub lc: usize,
    pub controls: Vec<usize>,
    pub garbled: GarbledCircuit,
    /// Wires `(y_i, m1_i, m2_i)` for each qubit, both labels.
    pub open_labels: Vec<[Label; 2]>,
    /// `resources[i][slot] = [teleport half, measured half]`.
    pub resources: Vec<[[String; 2]; 2]>,
}

impl Ciphertext for EncodedCircuit {
    fn registers(&self) -> Vec<String> {
        self.resources.iter().flat_map(|r| r.iter().flat_map(|s| s.iter().cloned())).collect()
    }

    fn rename(&mut self, f: &dyn Fn(&str) -> String) {
        for r in &mut self.resources {
            for s in r.iter_mut() {
                for name in s.iter_mut() {
                    *name = f(name);
                }
            }
        }
    }
}

impl Ciphertext for HybridCircuit {
    fn registers(&self) -> Vec<String> {
        Vec::new()
    }

    fn rename(&mut self, _f: &dyn Fn(&str) -> String) {}
}

/// Number of gates of the per-qubit Pauli-frame gadget in `F`.
const GADGET_GATES: usize = 20;
/// Secret constants per qubit: `a, b` and `(a1, b1, a2, gx, gz)` per branch.
const GADGET_CONSTANTS: usize = 12;

/// The garbled postprocessing circuit. Its inputs are the classical inputs
/// followed by `(y_i, m1_i, m2_i)` per qubit; the Pauli keys and gate data
/// are constants, so the topology depends only on the circuit's shape.
pub fn frame_circuit(c: &HybridCircuit, keys: &[QubitKeys]) -> Result<BoolCircuit> {
    c.validate()?;
    if keys.len() != c.lq {
        return Err(Error::Length { expected: c.lq, got: keys.len() });
    }
    let lc = c.lc;
    let open = |i: usize, k: usize| lc + 3 * i + k;
    let mut fc = BoolCircuit::new(lc + 3 * c.lq);
    let mut consts = Vec::with_capacity(c.lq);
    for (i, k) in keys.iter().enumerate() {
        let a = fc.constant(k.a);
        let b = fc.constant(k.b);
        let mut per_branch = [[0usize; 5]; 2];
        for (br, slot) in per_branch.iter_mut().enumerate() {
            let (gx, gz) = c.gates[i][br].x_exponents();
            let bk = k.branch[br];
            *slot = [fc.constant(bk.a1), fc.constant(bk.b1), fc.constant(bk.a2), fc.constant(gx), fc.constant(gz)];
        }
        consts.push((a, b, per_branch));
    }
    let f_consts: Vec<usize> = c.f.constants.iter().map(|&v| fc.constant(v)).collect();

    let mut x_wires = Vec::with_capacity(c.lq);
    for (i, &(a, b, per_branch)) in consts.iter().enumerate() {
        let (y, m1, m2) = (open(i, 0), open(i, 1), open(i, 2));
        let mut t = [0usize; 2];
        for (br, &[a1, b1, a2, gx, gz]) in per_branch.iter().enumerate() {
            let alpha = fc.xor(a, a1);
            let alpha = fc.xor(alpha, m2);
            let beta = fc.xor(b, b1);
            let beta = fc.xor(beta, m1);
            let xa = fc.and(gx, alpha);
            let zb = fc.and(gz, beta);
            let s = fc.xor(xa, zb);
            t[br] = fc.xor(s, a2);
        }
        let diff = fc.xor(t[0], t[1]);
        let sel = fc.and(c.controls[i], diff);
        let ti = fc.xor(t[0], sel);
        x_wires.push(fc.xor(y, ti));
    }
    debug_assert_eq!(fc.size(), GADGET_GATES * c.lq);
    debug_assert_eq!(fc.constants.len(), GADGET_CONSTANTS * c.lq + c.f.constants.len());

    let mut map: Vec<usize> = Vec::with_capacity(c.f.wire_count());
    map.extend(x_wires.iter().copied());
    map.extend(0..c.lc);
    map.extend(f_consts.iter().copied());
    for g in &c.f.gates {
        let w = fc.gate(map[g.a], map[g.b], g.table);
        map.push(w);
    }
    fc.outputs = c.f.outputs.iter().map(|&o| map[o]).collect();
    fc.validate()?;
    Ok(fc)
}

fn epr_pair() -> CVector {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    CVector::from_vec(vec![h, C64::new(0.0, 0.0), C64::new(0.0, 0.0), h])
}

fn resource_name(tag: &str, i: usize, slot: usize, half: usize) -> String {
    format!("{tag}.r{i}.s{slot}.{half}")
}

/// Samples `r` (wire labels and Pauli keys) and garbles `F`.
pub fn dqre_sample<R: Rng>(c: &HybridCircuit, lambda: usize, rng: &mut R) -> Result<(GarbledCircuit, Vec<[Label; 2]>, DqreRandomness)> {
    c.validate()?;
    let keys: Vec<QubitKeys> = (0..c.lq).map(|_| QubitKeys::random(rng)).collect();
    let fc = frame_circuit(c, &keys)?;
    let (gc, gr) = dre_garble(&fc, lambda, rng)?;
    let open_labels = gr.input_labels[c.lc..].to_vec();
    let garble = GarbleRandomness { lambda, input_labels: gr.input_labels[..c.lc].to_vec() };
    Ok((gc, open_labels, DqreRandomness { lambda, garble, keys }))
}

/// Writes the branch resources for `r` into `mem`. Deterministic in `r`.
pub fn dqre_prepare_resources(
    c: &HybridCircuit,
    r: &DqreRandomness,
    mem: &mut QuantumMemory,
    tag: &str,
) -> Result<Vec<[[String; 2]; 2]>> {
    let mut out = Vec::with_capacity(c.lq);
    for i in 0..c.lq {
        let keys = &r.keys[i];
        let mut slots: [[String; 2]; 2] = Default::default();
        for br in [false, true] {
            let slot = r.slot(c.controls[i], br)?;
            let names = [resource_name(tag, i, slot, 0), resource_name(tag, i, slot, 1)];
            let layout = RegisterLayout::qubits(&names)?;
            mem.insert(PureState::new(layout, epr_pair())?)?;
            let bk = keys.branch[br as usize];
            mem.apply(&c.gates[i][br as usize].unitary(), &[&names[1]])?;
            mem.apply(&UnitaryOp::pauli(bk.a1, bk.b1), &[&names[0]])?;
            mem.apply(&UnitaryOp::pauli(bk.a2, bk.b2), &[&names[1]])?;
            slots[slot] = names;
        }
        out.push(slots);
    }
    Ok(out)
}

/// `Enc`: samples `r`, garbles `F` and prepares the resources in `mem`.
/// The returned resource state `σ` is empty; resources live in `Ĉ`.
pub fn dqre_encode(c: &HybridCircuit, lambda: usize, mem: &mut QuantumMemory, tag: &str, rng: &mut Stream) -> Result<(EncodedCircuit, DqreRandomness)> {
    let (garbled, open_labels, r) = dqre_sample(c, lambda, rng)?;
    let resources = dqre_prepare_resources(c, &r, mem, tag)?;
    let enc = EncodedCircuit { lq: c.lq, lc: c.lc, controls: c.controls.clone(), garbled, open_labels, resources };
    Ok((enc, r))
}

/// `Lab^q_i`: pads the register holding input qubit `i` in place.
pub fn dqre_label_q(i: usize, register: &str, mem: &mut QuantumMemory, r: &DqreRandomness) -> Result<()> {
    let k = r.keys.get(i).ok_or_else(|| Error::Labels(format!("no quantum input {i}")))?;
    mem.apply(&UnitaryOp::pauli(k.a, k.b), &[register])
}

/// `Lab^c_i`: reads only `r`.
pub fn dqre_label_c(i: usize, bit: bool, r: &DqreRandomness) -> Result<Label> {
    dre_label(i, bit, &r.garble)
}

struct Prepared {
    mem: QuantumMemory,
    /// `(y, m1, m2)` register per qubit, flattened.
    measured: Vec<String>,
    unused: Vec<String>,
}

fn prepare_eval(enc: &EncodedCircuit, inputs: &[String], labels: &[Label], mem: &QuantumMemory) -> Result<Prepared> {
    if inputs.len() != enc.lq {
        return Err(Error::Labels(format!("expected {} quantum labels, got {}", enc.lq, inputs.len())));
    }
    if labels.len() != enc.lc {
        return Err(Error::Labels(format!("expected {} classical labels, got {}", enc.lc, labels.len())));
    }
    let mut tmp = mem.clone();
    let mut measured = Vec::with_capacity(3 * enc.lq);
    let mut unused = Vec::new();
    for (i, q) in inputs.iter().enumerate() {
        let slot = labels[enc.controls[i]].point as usize;
        let [r1, r2] = &enc.resources[i][slot];
        tmp.apply(&UnitaryOp::cnot(), &[q.as_str(), r1.as_str()])?;
        tmp.apply(&UnitaryOp::h(), &[q.as_str()])?;
        measured.extend([r2.clone(), q.clone(), r1.clone()]);
        unused.extend(enc.resources[i][1 - slot].iter().cloned());
    }
    Ok(Prepared { mem: tmp, measured, unused })
}

fn finish(enc: &EncodedCircuit, labels: &[Label], outcomes: &Bits) -> Result<Bits> {
    let mut all: Vec<Label> = labels.to_vec();
    for (w, bit) in outcomes.iter().enumerate() {
        all.push(enc.open_labels[w][bit as usize].clone());
    }
    Ok(Bits::from_bools(dre_eval(&enc.garbled, &all)?))
}

/// `Dec`: consumes the labelled inputs and every resource register.
pub fn dqre_eval(enc: &EncodedCircuit, inputs: &[String], labels: &[Label], mem: &mut QuantumMemory, rng: &mut Stream) -> Result<Bits> {
    let p = prepare_eval(enc, inputs, labels, mem)?;
    *mem = p.mem;
    let names: Vec<&str> = p.measured.iter().map(String::as_str).collect();
    let outcomes = mem.measure(&names, rng)?;
    let unused: Vec<&str> = p.unused.iter().map(String::as_str).collect();
    if !unused.is_empty() {
        mem.measure(&unused, rng)?;
    }
    finish(enc, labels, &outcomes)
}

/// Exact output distribution of [`dqre_eval`], leaving `mem` untouched.
pub fn dqre_eval_distribution(enc: &EncodedCircuit, inputs: &[String], labels: &[Label], mem: &QuantumMemory) -> Result<BTreeMap<Bits, f64>> {
    let p = prepare_eval(enc, inputs, labels, mem)?;
    let names: Vec<&str> = p.measured.iter().map(String::as_str).collect();
    let mut out = BTreeMap::new();
    for (x, prob) in p.mem.outcome_distribution(&names)? {
        *out.entry(finish(enc, labels, &x)?).or_insert(0.0) += prob;
    }
    Ok(out)
}

/// Joint state of the output and the registers `keep` after [`dqre_eval`].
pub fn dqre_eval_cq(enc: &EncodedCircuit, inputs: &[String], labels: &[Label], mem: &QuantumMemory, keep: &[&str]) -> Result<CqState> {
    let p = prepare_eval(enc, inputs, labels, mem)?;
    let names: Vec<&str> = p.measured.iter().map(String::as_str).collect();
    let mut out = CqState::default();
    for (x, rho) in p.mem.cq_state(&names, keep)?.branches() {
        out.add(finish(enc, labels, x)?, rho.clone())?;
    }
    Ok(out)
}

/// A DQRE as consumed by the compilers. Classical labels travel as bit
/// strings of length [`Dqre::label_len`].
pub trait Dqre: Send + Sync + Debug {
    type Encoded: Ciphertext + Serialize;
    type Randomness: Clone + Debug + Send + Sync;

    fn name(&self) -> &'static str;
    fn label_len(&self) -> usize;

    fn encode(&self, c: &HybridCircuit, mem: &mut QuantumMemory, tag: &str, rng: &mut Stream) -> Result<(Self::Encoded, Self::Randomness)>;
    fn label_q(&self, i: usize, register: &str, mem: &mut QuantumMemory, r: &Self::Randomness) -> Result<()>;
    fn label_c(&self, i: usize, bit: bool, r: &Self::Randomness) -> Result<Bits>;

    fn eval(&self, enc: &Self::Encoded, inputs: &[String], labels: &[Bits], mem: &mut QuantumMemory, rng: &mut Stream) -> Result<Bits>;
    fn eval_distribution(&self, enc: &Self::Encoded, inputs: &[String], labels: &[Bits], mem: &QuantumMemory) -> Result<BTreeMap<Bits, f64>>;
    fn eval_cq(&self, enc: &Self::Encoded, inputs: &[String], labels: &[Bits], mem: &QuantumMemory, keep: &[&str]) -> Result<CqState>;
}

/// The garbling-based instantiation.
#[derive(Clone, Copy, Debug)]
pub struct YaoDqre {
    pub lambda: usize,
}

impl YaoDqre {
    fn parse(&self, labels: &[Bits]) -> Result<Vec<Label>> {
        labels
            .iter()
            .map(|b| Label::from_bits(b, self.lambda).map_err(|_| Error::Labels(format!("label of length {} for λ = {}", b.len(), self.lambda))))
            .collect()
    }
}

impl Dqre for YaoDqre {
    type Encoded = EncodedCircuit;
    type Randomness = DqreRandomness;

    fn name(&self) -> &'static str {
        "yao"
    }

    fn label_len(&self) -> usize {
        self.lambda + 1
    }

    fn encode(&self, c: &HybridCircuit, mem: &mut QuantumMemory, tag: &str, rng: &mut Stream) -> Result<(EncodedCircuit, DqreRandomness)> {
        dqre_encode(c, self.lambda, mem, tag, rng)
    }

    fn label_q(&self, i: usize, register: &str, mem: &mut QuantumMemory, r: &DqreRandomness) -> Result<()> {
        dqre_label_q(i, register, mem, r)
    }

    fn label_c(&self, i: usize, bit: bool, r: &DqreRandomness) -> Result<Bits> {
        Ok(dqre_label_c(i, bit, r)?.to_bits())
    }

    fn eval(&self, enc: &EncodedCircuit, inputs: &[String], labels: &[Bits], mem: &mut QuantumMemory, rng: &mut Stream) -> Result<Bits> {
        dqre_eval(enc, inputs, &self.parse(labels)?, mem, rng)
    }

    fn eval_distribution(&self, enc: &EncodedCircuit, inputs: &[String], labels: &[Bits], mem: &QuantumMemory) -> Result<BTreeMap<Bits, f64>> {
        dqre_eval_distribution(enc, inputs, &self.parse(labels)?, mem)
    }

    fn eval_cq(&self, enc: &EncodedCircuit, inputs: &[String], labels: &[Bits], mem: &QuantumMemory, keep: &[&str]) -> Result<CqState> {
        dqre_eval_cq(enc, inputs, &self.parse(labels)?, mem, keep)
    }
}

/// Plumbing control: labels are the inputs themselves and `Ĉ = C`.
#[derive(Clone, Copy, Debug, Default)]
pub struct TransparentDqre;

impl Dqre for TransparentDqre {
    type Encoded = HybridCircuit;
    type Randomness = ();

    fn name(&self) -> &'static str {
        "transparent"
    }

    fn label_len(&self) -> usize {
        1
    }

    fn encode(&self, c: &HybridCircuit, _mem: &mut QuantumMemory, _tag: &str, _rng: &mut Stream) -> Result<(HybridCircuit, ())> {
        c.validate()?;
        Ok((c.clone(), ()))
    }

    fn label_q(&self, _i: usize, _register: &str, _mem: &mut QuantumMemory, _r: &()) -> Result<()> {
        Ok(())
    }

    fn label_c(&self, _i: usize, bit: bool, _r: &()) -> Result<Bits> {
        Ok(Bits::from_bools(vec![bit]))
    }

    fn eval(&self, enc: &HybridCircuit, inputs: &[String], labels: &[Bits], mem: &mut QuantumMemory, rng: &mut Stream) -> Result<Bits> {
        enc.run(mem, inputs, &transparent_inputs(labels)?, rng)
    }

    fn eval_distribution(&self, enc: &HybridCircuit, inputs: &[String], labels: &[Bits], mem: &QuantumMemory) -> Result<BTreeMap<Bits, f64>> {
        enc.direct_distribution(mem, inputs, &transparent_inputs(labels)?)
    }

    fn eval_cq(&self, enc: &HybridCircuit, inputs: &[String], labels: &[Bits], mem: &QuantumMemory, keep: &[&str]) -> Result<CqState> {
        enc.direct_cq(mem, inputs, &transparent_inputs(labels)?, keep)
    }
}

fn transparent_inputs(labels: &[Bits]) -> Result<Bits> {
    let mut out = Bits::default();
    for l in labels {
        l.check_len(1).map_err(|_| Error::Labels("transparent labels are single bits".into()))?;
        out.push(l.get(0));
    }
    Ok(out)
}
