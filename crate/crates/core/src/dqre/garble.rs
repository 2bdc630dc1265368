//! Boolean circuits and point-and-permute garbling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::symcrypto::{ClassicalCiphertext, Ske};

/// A binary gate; output bit is bit `2·a + b` of `table`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub a: usize,
    pub b: usize,
    pub table: u8,
}

pub const XOR: u8 = 0b0110;
pub const AND: u8 = 0b1000;
pub const OR: u8 = 0b1110;
/// `¬a`, used with `b = a`.
pub const NOT: u8 = 0b0011;

impl Gate {
    pub fn apply(&self, a: bool, b: bool) -> bool {
        (self.table >> (2 * a as u8 + b as u8)) & 1 == 1
    }
}

/// Wires are numbered: evaluator inputs, then constant wires, then one wire
/// per gate in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoolCircuit {
    pub inputs: usize,
    pub constants: Vec<bool>,
    pub gates: Vec<Gate>,
    pub outputs: Vec<usize>,
}

/// Wiring without gate functions or constant values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Topology {
    pub inputs: usize,
    pub constants: usize,
    pub wiring: Vec<(usize, usize)>,
    pub outputs: Vec<usize>,
}

impl Topology {
    pub fn wire_count(&self) -> usize {
        self.inputs + self.constants + self.wiring.len()
    }

    fn first_gate_wire(&self) -> usize {
        self.inputs + self.constants
    }
}

impl BoolCircuit {
    pub fn new(inputs: usize) -> Self {
        BoolCircuit { inputs, constants: Vec::new(), gates: Vec::new(), outputs: Vec::new() }
    }

    pub fn wire_count(&self) -> usize {
        self.inputs + self.constants.len() + self.gates.len()
    }

    /// Adds a constant wire. Only valid before any gate is added.
    pub fn constant(&mut self, v: bool) -> usize {
        assert!(self.gates.is_empty(), "constants must precede gates");
        self.constants.push(v);
        self.inputs + self.constants.len() - 1
    }

    pub fn gate(&mut self, a: usize, b: usize, table: u8) -> usize {
        self.gates.push(Gate { a, b, table });
        self.wire_count() - 1
    }

    pub fn xor(&mut self, a: usize, b: usize) -> usize {
        self.gate(a, b, XOR)
    }

    pub fn and(&mut self, a: usize, b: usize) -> usize {
        self.gate(a, b, AND)
    }

    pub fn or(&mut self, a: usize, b: usize) -> usize {
        self.gate(a, b, OR)
    }

    pub fn not(&mut self, a: usize) -> usize {
        self.gate(a, a, NOT)
    }

    /// Canonical size `|C|`: the number of gates.
    pub fn size(&self) -> usize {
        self.gates.len()
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.inputs + self.constants.len();
        for (k, g) in self.gates.iter().enumerate() {
            if g.a >= first + k || g.b >= first + k {
                return Err(Error::CircuitClass(format!("gate {k} reads an undefined wire")));
            }
        }
        if let Some(o) = self.outputs.iter().find(|&&o| o >= self.wire_count()) {
            return Err(Error::CircuitClass(format!("output wire {o} undefined")));
        }
        Ok(())
    }

    pub fn topology(&self) -> Topology {
        Topology {
            inputs: self.inputs,
            constants: self.constants.len(),
            wiring: self.gates.iter().map(|g| (g.a, g.b)).collect(),
            outputs: self.outputs.clone(),
        }
    }

    pub fn eval(&self, inputs: &[bool]) -> Result<Vec<bool>> {
        if inputs.len() != self.inputs {
            return Err(Error::Length { expected: self.inputs, got: inputs.len() });
        }
        let mut w: Vec<bool> = inputs.to_vec();
        w.extend_from_slice(&self.constants);
        for g in &self.gates {
            let v = g.apply(w[g.a], w[g.b]);
            w.push(v);
        }
        Ok(self.outputs.iter().map(|&o| w[o]).collect())
    }

    /// Appends gates that feed nothing until the size reaches `size`.
    pub fn pad_to(&mut self, size: usize) -> Result<()> {
        if self.size() > size {
            return Err(Error::CircuitClass(format!("circuit of size {} exceeds padded size {size}", self.size())));
        }
        if self.wire_count() == 0 {
            return Err(Error::CircuitClass("cannot pad a circuit without wires".into()));
        }
        while self.size() < size {
            self.gate(0, 0, XOR);
        }
        Ok(())
    }
}

/// A wire label: a `λ`-bit key and a point bit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Label {
    pub key: Bits,
    pub point: bool,
}

impl Label {
    pub fn random<R: Rng + ?Sized>(lambda: usize, point: bool, rng: &mut R) -> Self {
        Label { key: Bits::random(lambda, rng), point }
    }

    /// `key ‖ point`, `λ + 1` bits.
    pub fn to_bits(&self) -> Bits {
        let mut b = self.key.clone();
        b.push(self.point);
        b
    }

    pub fn from_bits(bits: &Bits, lambda: usize) -> Result<Self> {
        bits.check_len(lambda + 1)?;
        Ok(Label { key: bits.slice(0, lambda), point: bits.get(lambda) })
    }
}

/// Both labels of every evaluator input wire, indexed `[wire][bit]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GarbleRandomness {
    pub lambda: usize,
    pub input_labels: Vec<[Label; 2]>,
}

impl GarbleRandomness {
    pub fn label(&self, wire: usize, bit: bool) -> Result<&Label> {
        self.input_labels
            .get(wire)
            .map(|pair| &pair[bit as usize])
            .ok_or_else(|| Error::Labels(format!("no input wire {wire}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GarbledCircuit {
    pub lambda: usize,
    pub wiring: Vec<(usize, usize)>,
    pub inputs: usize,
    pub outputs: Vec<usize>,
    /// Active labels of the constant wires.
    pub constant_labels: Vec<Label>,
    /// Four rows per gate, indexed by `2·point_a + point_b`.
    pub tables: Vec<[ClassicalCiphertext; 4]>,
    /// Point bit of the 0-label of each output wire.
    pub output_decode: Vec<bool>,
}

impl GarbledCircuit {
    pub fn topology(&self) -> Topology {
        Topology {
            inputs: self.inputs,
            constants: self.constant_labels.len(),
            wiring: self.wiring.clone(),
            outputs: self.outputs.clone(),
        }
    }
}

fn row_schemes(lambda: usize) -> Result<(Ske, Ske)> {
    let plain = 2 * lambda + 1;
    let inner = Ske::new(lambda, plain)?;
    let outer = Ske::new(lambda, lambda + plain)?;
    Ok((inner, outer))
}

fn seal(lambda: usize, ka: &Label, kb: &Label, out: &Label, rng: &mut dyn rand::RngCore) -> Result<ClassicalCiphertext> {
    let (inner, outer) = row_schemes(lambda)?;
    let plain = out.to_bits().concat(&Bits::zeros(lambda));
    let mid = inner.enc(&kb.key, &plain, rng)?;
    outer.enc(&ka.key, &mid.to_bits(), rng)
}

fn open(lambda: usize, ka: &Label, kb: &Label, row: &ClassicalCiphertext) -> Option<Label> {
    let (inner, outer) = row_schemes(lambda).ok()?;
    let mid = outer.dec(&ka.key, row).ok()?;
    let mid = ClassicalCiphertext::from_bits(&mid, lambda).ok()?;
    let plain = inner.dec(&kb.key, &mid).ok()?;
    if !plain.slice(lambda + 1, 2 * lambda + 1).is_zero() {
        return None;
    }
    Label::from_bits(&plain.slice(0, lambda + 1), lambda).ok()
}

/// Garbles `c`. Returns the garbled circuit and both labels of every
/// evaluator input wire.
pub fn dre_garble<R: Rng>(c: &BoolCircuit, lambda: usize, rng: &mut R) -> Result<(GarbledCircuit, GarbleRandomness)> {
    c.validate()?;
    if lambda == 0 {
        return Err(Error::Config("λ must be positive".into()));
    }
    let mut wires: Vec<[Label; 2]> = Vec::with_capacity(c.wire_count());
    for _ in 0..c.inputs + c.constants.len() + c.gates.len() {
        let p: bool = rng.random();
        wires.push([Label::random(lambda, p, rng), Label::random(lambda, !p, rng)]);
    }
    let first = c.inputs + c.constants.len();
    let mut tables = Vec::with_capacity(c.gates.len());
    for (k, g) in c.gates.iter().enumerate() {
        let out = &wires[first + k];
        let mut rows: [Option<ClassicalCiphertext>; 4] = Default::default();
        for va in [false, true] {
            for vb in [false, true] {
                let la = &wires[g.a][va as usize];
                let lb = &wires[g.b][vb as usize];
                let idx = 2 * la.point as usize + lb.point as usize;
                let ol = &out[g.apply(va, vb) as usize];
                rows[idx] = Some(seal(lambda, la, lb, ol, rng)?);
            }
        }
        tables.push(rows.map(|r| r.expect("every point pair is covered")));
    }
    let constant_labels = c
        .constants
        .iter()
        .enumerate()
        .map(|(j, &v)| wires[c.inputs + j][v as usize].clone())
        .collect();
    let output_decode = c.outputs.iter().map(|&o| wires[o][0].point).collect();
    let topo = c.topology();
    let gc = GarbledCircuit {
        lambda,
        wiring: topo.wiring.clone(),
        inputs: c.inputs,
        outputs: c.outputs.clone(),
        constant_labels,
        tables,
        output_decode,
    };
    Ok((gc, GarbleRandomness { lambda, input_labels: wires[..c.inputs].to_vec() }))
}

/// `Lab_i(x_i)`.
pub fn dre_label(i: usize, bit: bool, r: &GarbleRandomness) -> Result<Label> {
    r.label(i, bit).cloned()
}

/// Evaluates on one label per evaluator input wire.
pub fn dre_eval(gc: &GarbledCircuit, labels: &[Label]) -> Result<Vec<bool>> {
    if labels.len() != gc.inputs {
        return Err(Error::Labels(format!("expected {} input labels, got {}", gc.inputs, labels.len())));
    }
    let mut active: Vec<Label> = labels.to_vec();
    active.extend(gc.constant_labels.iter().cloned());
    for (k, &(a, b)) in gc.wiring.iter().enumerate() {
        let (la, lb) = (&active[a], &active[b]);
        if la.key.len() != gc.lambda || lb.key.len() != gc.lambda {
            return Err(Error::GarbledEval(format!("gate {k}: label of wrong length")));
        }
        let row = &gc.tables[k][2 * la.point as usize + lb.point as usize];
        let out = open(gc.lambda, la, lb, row).ok_or_else(|| Error::GarbledEval(format!("gate {k}: no row opens")))?;
        active.push(out);
    }
    Ok(gc.outputs.iter().zip(&gc.output_decode).map(|(&o, &d)| active[o].point ^ d).collect())
}

/// A garbled circuit for `topology` whose evaluation yields `y`, built
/// without the circuit's gate functions.
pub fn dre_simulate<R: Rng>(topology: &Topology, lambda: usize, y: &[bool], rng: &mut R) -> Result<(GarbledCircuit, Vec<Label>)> {
    if y.len() != topology.outputs.len() {
        return Err(Error::Length { expected: topology.outputs.len(), got: y.len() });
    }
    let active: Vec<Label> = (0..topology.wire_count()).map(|_| Label::random(lambda, rng.random(), rng)).collect();
    let first = topology.first_gate_wire();
    let (_, outer) = row_schemes(lambda)?;
    let row_len = outer.ct_len();
    let mut tables = Vec::new();
    for (k, &(a, b)) in topology.wiring.iter().enumerate() {
        if a >= first + k || b >= first + k {
            return Err(Error::CircuitClass(format!("gate {k} reads an undefined wire")));
        }
        let idx = 2 * active[a].point as usize + active[b].point as usize;
        let mut rows: [ClassicalCiphertext; 4] = std::array::from_fn(|_| {
            ClassicalCiphertext::from_bits(&Bits::random(row_len, rng), lambda).expect("row length ≥ λ")
        });
        rows[idx] = seal(lambda, &active[a], &active[b], &active[first + k], rng)?;
        tables.push(rows);
    }
    let mut output_decode = Vec::new();
    for (j, &o) in topology.outputs.iter().enumerate() {
        let d = active[o].point ^ y[j];
        if let Some(prev) = topology.outputs[..j].iter().position(|&p| p == o) {
            if output_decode[prev] != d {
                return Err(Error::Precondition("output wire shared by outputs with different values".into()));
            }
        }
        output_decode.push(d);
    }
    let gc = GarbledCircuit {
        lambda,
        wiring: topology.wiring.clone(),
        inputs: topology.inputs,
        outputs: topology.outputs.clone(),
        constant_labels: active[topology.inputs..first].to_vec(),
        tables,
        output_decode,
    };
    Ok((gc, active[..topology.inputs].to_vec()))
}
