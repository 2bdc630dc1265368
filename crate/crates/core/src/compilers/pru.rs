//! Keyed unitary families standing in for pseudorandom unitaries.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use parking_lot::RwLock;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::qstate::{haar_unitary, CMatrix, QuantumMemory, UnitaryOp, C64, DIMENSION_CAP};
use crate::rng::Stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PruMode {
    /// A Haar-random unitary per key, sampled once and cached.
    Ideal,
    /// Layers of key-seeded Haar two-qubit gates on alternating pairs.
    Brickwork { depth: Option<usize> },
    /// `U_k = I` for every key; a control for tests.
    Identity,
}

#[derive(Debug)]
pub struct PruFamily {
    pub lambda: usize,
    pub dim: usize,
    pub mode: PruMode,
    cache: RwLock<HashMap<Bits, Arc<UnitaryOp>>>,
}

impl Clone for PruFamily {
    fn clone(&self) -> Self {
        PruFamily { lambda: self.lambda, dim: self.dim, mode: self.mode, cache: RwLock::new(self.cache.read().clone()) }
    }
}

impl PruFamily {
    pub fn new(lambda: usize, dim: usize, mode: PruMode) -> Result<Self> {
        if lambda == 0 {
            return Err(Error::Config("PRU key length must be positive".into()));
        }
        if !(2..=DIMENSION_CAP).contains(&dim) {
            return Err(Error::Config(format!("PRU dimension {dim} outside 2..={DIMENSION_CAP}")));
        }
        if matches!(mode, PruMode::Brickwork { .. }) && !dim.is_power_of_two() {
            return Err(Error::Config(format!("brickwork circuits need a power-of-two dimension, got {dim}")));
        }
        Ok(PruFamily { lambda, dim, mode, cache: RwLock::new(HashMap::new()) })
    }

    pub fn key_gen<R: Rng + ?Sized>(&self, rng: &mut R) -> Bits {
        Bits::random(self.lambda, rng)
    }

    fn qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn depth(&self) -> usize {
        match self.mode {
            PruMode::Brickwork { depth } => depth.unwrap_or(2 * self.qubits()),
            _ => 0,
        }
    }

    /// `U_k`, deterministic per key.
    pub fn unitary(&self, k: &Bits) -> Result<Arc<UnitaryOp>> {
        k.check_len(self.lambda)?;
        if let Some(u) = self.cache.read().get(k) {
            return Ok(u.clone());
        }
        let mut rng = Stream::keyed("pru", &k.to_bytes());
        let u = match self.mode {
            PruMode::Ideal => haar_unitary(self.dim, &mut rng),
            PruMode::Identity => UnitaryOp::identity(self.dim),
            PruMode::Brickwork { .. } => self.brickwork(&mut rng)?,
        };
        let u = Arc::new(u);
        Ok(self.cache.write().entry(k.clone()).or_insert(u).clone())
    }

    fn brickwork(&self, rng: &mut Stream) -> Result<UnitaryOp> {
        let q = self.qubits();
        let mut total = CMatrix::identity(self.dim, self.dim);
        for layer in 0..self.depth() {
            if q == 1 {
                total = haar_unitary(2, rng).matrix() * total;
                continue;
            }
            let mut j = layer % 2;
            while j + 1 < q {
                let gate = haar_unitary(4, rng);
                let left = CMatrix::identity(1 << j, 1 << j);
                let right = CMatrix::identity(1 << (q - j - 2), 1 << (q - j - 2));
                let full: DMatrix<C64> = left.kronecker(gate.matrix()).kronecker(&right);
                total = full * total;
                j += 2;
            }
        }
        UnitaryOp::new(total)
    }

    /// Applies `U_k` to `target`, whose dimension must match.
    pub fn apply(&self, k: &Bits, mem: &mut QuantumMemory, target: &str) -> Result<()> {
        let d = mem.local_dim(target)?;
        if d != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: d });
        }
        let u = self.unitary(k)?;
        mem.apply(&u, &[target])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{trace_distance, DensityMatrix, PureState, RegisterLayout};

    #[test]
    fn deterministic_and_unitary() {
        for mode in [PruMode::Ideal, PruMode::Brickwork { depth: None }, PruMode::Identity] {
            let fam = PruFamily::new(16, 8, mode).unwrap();
            let mut rng = Stream::new(1);
            for _ in 0..5 {
                let k = fam.key_gen(&mut rng);
                let u = fam.unitary(&k).unwrap();
                assert!(u.unitarity_error() < 1e-9);
                let fresh = PruFamily::new(16, 8, mode).unwrap();
                assert_eq!(fresh.unitary(&k).unwrap().matrix(), u.matrix());
            }
        }
        assert_eq!(PruFamily::new(8, 8, PruMode::Brickwork { depth: None }).unwrap().depth(), 6);
    }

    #[test]
    fn same_key_same_output() {
        let fam = PruFamily::new(16, 2, PruMode::Brickwork { depth: None }).unwrap();
        let k = fam.key_gen(&mut Stream::new(2));
        let run = || {
            let mut mem = QuantumMemory::new();
            mem.prepare_qubit("b", false).unwrap();
            fam.apply(&k, &mut mem, "b").unwrap();
            mem.reduced(&["b"]).unwrap()
        };
        assert!(trace_distance(&run(), &run()).unwrap() < 1e-15);
    }

    #[test]
    fn ideal_first_moment_is_maximally_mixed() {
        let fam = PruFamily::new(32, 4, PruMode::Ideal).unwrap();
        let mut rng = Stream::new(3);
        let layout = RegisterLayout::single("b", 4).unwrap();
        let zero = PureState::basis(layout.clone(), &[0]).unwrap();
        let mut acc = CMatrix::zeros(4, 4);
        let n = 1000;
        for _ in 0..n {
            let u = fam.unitary(&fam.key_gen(&mut rng)).unwrap();
            let v = u.matrix() * zero.amplitudes();
            acc += &v * v.adjoint();
        }
        let mean = DensityMatrix::new(layout.clone(), acc / C64::from(n as f64)).unwrap();
        assert!(trace_distance(&mean, &DensityMatrix::maximally_mixed(layout)).unwrap() < 0.05);
    }

    #[test]
    fn configuration_errors() {
        assert!(PruFamily::new(8, 6, PruMode::Brickwork { depth: None }).is_err());
        assert!(PruFamily::new(8, 6, PruMode::Ideal).is_ok());
        assert!(PruFamily::new(0, 4, PruMode::Ideal).is_err());
        let fam = PruFamily::new(8, 4, PruMode::Ideal).unwrap();
        let mut mem = QuantumMemory::new();
        mem.prepare_qubit("b", false).unwrap();
        assert!(matches!(fam.apply(&Bits::zeros(8), &mut mem, "b"), Err(Error::DimensionMismatch { .. })));
    }
}
