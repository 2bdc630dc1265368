//! Empirical distinguishing experiments between encodings of two circuits
//! whose outputs agree.

use rand::Rng;
use serde::Serialize;

use super::{dqre_encode, dqre_eval_distribution, dqre_label_c, dqre_label_q, EncodedCircuit, HybridCircuit, Label};
use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::qstate::{QuantumMemory, STATE_TOL};
use crate::rng::Stream;
use crate::stats::Estimate;

/// A circuit together with the inputs it is run on.
#[derive(Clone, Debug)]
pub struct CircuitInstance {
    pub circuit: HybridCircuit,
    pub mem: QuantumMemory,
    pub qubits: Vec<String>,
    pub classical: Bits,
}

/// What a distinguisher sees: `Ĉ`, the labelled qubits inside `mem` and the
/// classical labels.
pub struct View<'a> {
    pub encoded: &'a EncodedCircuit,
    pub mem: &'a QuantumMemory,
    pub qubits: &'a [String],
    pub labels: &'a [Label],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Distinguisher {
    /// First output bit of an honest evaluation.
    OutputBit,
    /// Parity of the point bits of the classical labels.
    LabelPattern,
    /// Computational measurement of one half of the first resource.
    ResourceMarginal,
    /// Swap test between the two branch halves of the first qubit.
    SwapTest,
    /// Computational measurement of the first labelled input.
    PaddedInput,
}

impl Distinguisher {
    pub const BATTERY: [Distinguisher; 5] = [
        Distinguisher::OutputBit,
        Distinguisher::LabelPattern,
        Distinguisher::ResourceMarginal,
        Distinguisher::SwapTest,
        Distinguisher::PaddedInput,
    ];

    /// Probability of answering 1 on `view`.
    pub fn accept_probability(self, view: &View<'_>) -> Result<f64> {
        match self {
            Distinguisher::OutputBit => {
                let d = dqre_eval_distribution(view.encoded, view.qubits, view.labels, view.mem)?;
                Ok(d.iter().filter(|(y, _)| !y.is_empty() && y.get(0)).map(|(_, p)| p).sum())
            }
            Distinguisher::LabelPattern => Ok(view.labels.iter().fold(false, |acc, l| acc ^ l.point) as u8 as f64),
            Distinguisher::ResourceMarginal => match view.encoded.resources.first() {
                Some(r) => one_probability(view.mem, &r[0][1]),
                None => Ok(0.0),
            },
            Distinguisher::SwapTest => match view.encoded.resources.first() {
                Some(r) => {
                    let rho = view.mem.reduced(&[&r[0][0], &r[1][0]])?;
                    let m = rho.matrix();
                    let mut swap_tr = 0.0;
                    for i in 0..2 {
                        for j in 0..2 {
                            swap_tr += m[(2 * i + j, 2 * j + i)].re;
                        }
                    }
                    // The test reports 1 on the antisymmetric outcome.
                    Ok((1.0 - swap_tr) / 2.0)
                }
                None => Ok(0.0),
            },
            Distinguisher::PaddedInput => match view.qubits.first() {
                Some(q) => one_probability(view.mem, q),
                None => Ok(0.0),
            },
        }
    }
}

fn one_probability(mem: &QuantumMemory, reg: &str) -> Result<f64> {
    let d = mem.outcome_distribution(&[reg])?;
    Ok(d.iter().filter(|(b, _)| b.get(0)).map(|(_, p)| p).sum())
}

#[derive(Clone, Debug, Serialize)]
pub struct IndistReport {
    pub distinguisher: Distinguisher,
    pub c: Estimate,
    pub d: Estimate,
    pub advantage: f64,
    /// Sum of the two interval half-widths.
    pub tolerance: f64,
    pub within_ci: bool,
}

/// Both circuits must have the same shape and the same output distribution
/// on their inputs.
pub fn check_precondition(c: &CircuitInstance, d: &CircuitInstance) -> Result<()> {
    if c.circuit.shape() != d.circuit.shape() {
        return Err(Error::Precondition("circuits differ in shape".into()));
    }
    let pc = c.circuit.direct_distribution(&c.mem, &c.qubits, &c.classical)?;
    let pd = d.circuit.direct_distribution(&d.mem, &d.qubits, &d.classical)?;
    let tv = super::total_variation(&pc, &pd);
    if tv > STATE_TOL {
        return Err(Error::Precondition(format!("output distributions differ (total variation {tv:.3e})")));
    }
    Ok(())
}

/// Encodes and labels `inst` with fresh randomness, returning the view.
pub fn sample_view(inst: &CircuitInstance, lambda: usize, rng: &mut Stream) -> Result<(EncodedCircuit, QuantumMemory, Vec<Label>)> {
    let mut mem = inst.mem.clone();
    let (enc, r) = dqre_encode(&inst.circuit, lambda, &mut mem, "enc", rng)?;
    for (i, q) in inst.qubits.iter().enumerate() {
        dqre_label_q(i, q, &mut mem, &r)?;
    }
    let labels = (0..inst.circuit.lc).map(|i| dqre_label_c(i, inst.classical.get(i), &r)).collect::<Result<Vec<_>>>()?;
    Ok((enc, mem, labels))
}

fn run_side(inst: &CircuitInstance, lambda: usize, samples: u64, rng: &Stream, side: &str) -> Result<Vec<u64>> {
    let mut wins = vec![0u64; Distinguisher::BATTERY.len()];
    for s in 0..samples {
        let mut rng = rng.substream(side, s);
        let (enc, mem, labels) = sample_view(inst, lambda, &mut rng)?;
        let view = View { encoded: &enc, mem: &mem, qubits: &inst.qubits, labels: &labels };
        for (k, dist) in Distinguisher::BATTERY.iter().enumerate() {
            let p = dist.accept_probability(&view)?;
            if rng.random::<f64>() < p {
                wins[k] += 1;
            }
        }
    }
    Ok(wins)
}

/// Runs the battery on `samples` independent encodings of each side.
pub fn dqre_indist_check(c: &CircuitInstance, d: &CircuitInstance, lambda: usize, samples: u64, seed: u64) -> Result<Vec<IndistReport>> {
    check_precondition(c, d)?;
    let rng = Stream::new(seed);
    let wc = run_side(c, lambda, samples, &rng, "indist.c")?;
    let wd = run_side(d, lambda, samples, &rng, "indist.d")?;
    Ok(Distinguisher::BATTERY
        .iter()
        .enumerate()
        .map(|(k, &distinguisher)| {
            let (ec, ed) = (Estimate::new(wc[k], samples), Estimate::new(wd[k], samples));
            let advantage = (ec.estimate - ed.estimate).abs();
            let tolerance = ec.half_width() + ed.half_width();
            IndistReport { distinguisher, c: ec, d: ed, advantage, tolerance, within_ci: advantage <= tolerance }
        })
        .collect())
}
