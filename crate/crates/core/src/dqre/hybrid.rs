//! Circuits of the restricted class: each input qubit gets one of two
//! single-qubit Cliffords selected by a classical input bit, every qubit is
//! measured in the computational basis, and a Boolean circuit computes the
//! output from the outcomes and the classical inputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::garble::{BoolCircuit, Topology};
use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::qstate::{CqState, QuantumMemory, UnitaryOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Clifford1 {
    I,
    X,
    Y,
    Z,
    H,
    S,
}

impl Clifford1 {
    pub fn unitary(self) -> UnitaryOp {
        match self {
            Clifford1::I => UnitaryOp::identity(2),
            Clifford1::X => UnitaryOp::x(),
            Clifford1::Y => UnitaryOp::y(),
            Clifford1::Z => UnitaryOp::z(),
            Clifford1::H => UnitaryOp::h(),
            Clifford1::S => UnitaryOp::s(),
        }
    }

    /// X-exponents of `G X G†` and `G Z G†`: a Pauli `X^α Z^β` in front of
    /// `G` becomes one whose X-exponent is `gx·α ⊕ gz·β`.
    pub fn x_exponents(self) -> (bool, bool) {
        let g = self.unitary();
        let conj = |p: &UnitaryOp| g.matrix() * p.matrix() * g.matrix().adjoint();
        (x_part(&conj(&UnitaryOp::x())), x_part(&conj(&UnitaryOp::z())))
    }
}

/// X-exponent of a matrix proportional to a Pauli.
fn x_part(m: &crate::qstate::CMatrix) -> bool {
    let off = m[(0, 1)].norm() + m[(1, 0)].norm();
    let diag = m[(0, 0)].norm() + m[(1, 1)].norm();
    debug_assert!(off < 1e-12 || diag < 1e-12, "not a Pauli");
    off > diag
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridCircuit {
    pub lq: usize,
    pub lc: usize,
    /// Classical input selecting qubit `i`'s gate.
    pub controls: Vec<usize>,
    /// `gates[i][c]` is applied to qubit `i` when its control bit is `c`.
    pub gates: Vec<[Clifford1; 2]>,
    /// Inputs: the `lq` outcomes, then the `lc` classical bits.
    pub f: BoolCircuit,
}

/// Public shape; equal shapes mean equal sizes `|C| = |D|`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HybridShape {
    pub lq: usize,
    pub lc: usize,
    pub controls: Vec<usize>,
    pub f: Topology,
}

impl HybridCircuit {
    pub fn validate(&self) -> Result<()> {
        if self.controls.len() != self.lq || self.gates.len() != self.lq {
            return Err(Error::CircuitClass("one control and one gate pair per qubit required".into()));
        }
        if let Some(c) = self.controls.iter().find(|&&c| c >= self.lc) {
            return Err(Error::CircuitClass(format!("control index {c} ≥ ℓ_c = {}", self.lc)));
        }
        if self.f.inputs != self.lq + self.lc {
            return Err(Error::CircuitClass(format!(
                "postprocessing takes {} inputs, expected {}",
                self.f.inputs,
                self.lq + self.lc
            )));
        }
        self.f.validate()
    }

    pub fn shape(&self) -> HybridShape {
        HybridShape { lq: self.lq, lc: self.lc, controls: self.controls.clone(), f: self.f.topology() }
    }

    pub fn output_len(&self) -> usize {
        self.f.outputs.len()
    }

    pub fn postprocess(&self, outcomes: &Bits, classical: &Bits) -> Result<Bits> {
        let input: Vec<bool> = outcomes.iter().chain(classical.iter()).collect();
        Ok(Bits::from_bools(self.f.eval(&input)?))
    }

    fn check_inputs(&self, qubits: &[String], classical: &Bits) -> Result<()> {
        self.validate()?;
        if qubits.len() != self.lq {
            return Err(Error::Length { expected: self.lq, got: qubits.len() });
        }
        classical.check_len(self.lc)
    }

    fn rotated(&self, mem: &QuantumMemory, qubits: &[String], classical: &Bits) -> Result<QuantumMemory> {
        self.check_inputs(qubits, classical)?;
        let mut tmp = mem.clone();
        for (i, q) in qubits.iter().enumerate() {
            let g = self.gates[i][classical.get(self.controls[i]) as usize];
            if g != Clifford1::I {
                tmp.apply(&g.unitary(), &[q.as_str()])?;
            }
        }
        Ok(tmp)
    }

    /// Exact output distribution when run directly on `qubits` in `mem`.
    pub fn direct_distribution(&self, mem: &QuantumMemory, qubits: &[String], classical: &Bits) -> Result<BTreeMap<Bits, f64>> {
        let tmp = self.rotated(mem, qubits, classical)?;
        let names: Vec<&str> = qubits.iter().map(String::as_str).collect();
        let mut out = BTreeMap::new();
        for (x, p) in tmp.outcome_distribution(&names)? {
            *out.entry(self.postprocess(&x, classical)?).or_insert(0.0) += p;
        }
        Ok(out)
    }

    /// Joint state of the output and the registers `keep`, from direct execution.
    pub fn direct_cq(&self, mem: &QuantumMemory, qubits: &[String], classical: &Bits, keep: &[&str]) -> Result<CqState> {
        let tmp = self.rotated(mem, qubits, classical)?;
        let names: Vec<&str> = qubits.iter().map(String::as_str).collect();
        let by_outcome = tmp.cq_state(&names, keep)?;
        let mut out = CqState::default();
        for (x, rho) in by_outcome.branches() {
            out.add(self.postprocess(x, classical)?, rho.clone())?;
        }
        Ok(out)
    }

    /// Runs the circuit, consuming the input qubits.
    pub fn run(&self, mem: &mut QuantumMemory, qubits: &[String], classical: &Bits, rng: &mut crate::rng::Stream) -> Result<Bits> {
        self.check_inputs(qubits, classical)?;
        for (i, q) in qubits.iter().enumerate() {
            let g = self.gates[i][classical.get(self.controls[i]) as usize];
            mem.apply(&g.unitary(), &[q.as_str()])?;
        }
        let names: Vec<&str> = qubits.iter().map(String::as_str).collect();
        let x = mem.measure(&names, rng)?;
        self.postprocess(&x, classical)
    }
}

/// Output-distribution helper for tests and reports.
pub fn total_variation(a: &BTreeMap<Bits, f64>, b: &BTreeMap<Bits, f64>) -> f64 {
    let mut keys: Vec<&Bits> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.iter().map(|k| (a.get(*k).unwrap_or(&0.0) - b.get(*k).unwrap_or(&0.0)).abs()).sum::<f64>() / 2.0
}
