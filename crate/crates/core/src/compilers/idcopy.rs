//! The identical-copy compiler: `Enc^id(ek, m; k) = (I_A ⊗ U_k)_B E|ek, m, 0⟩`
//! with a fresh unitary key `k` per encryption; decryption discards `B`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

use super::pru::{PruFamily, PruMode};
use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::qstate::{PureState, QuantumMemory, RegisterLayout};
use crate::rng::Stream;
use crate::scheme::{Ciphertext, Scheme};
use crate::ucbit::{PureEncoding, Ucbit, UcbitCt, UcbitKey};

#[derive(Clone, Debug)]
pub struct IdCopyCt<C> {
    pub inner: C,
    pub purifier: String,
}

impl<C: Ciphertext> Ciphertext for IdCopyCt<C> {
    fn registers(&self) -> Vec<String> {
        let mut r = self.inner.registers();
        r.push(self.purifier.clone());
        r
    }

    fn rename(&mut self, f: &dyn Fn(&str) -> String) {
        self.inner.rename(f);
        self.purifier = f(&self.purifier);
    }
}

/// The compiler over the one-bit scheme, whose pure encoder is held densely.
#[derive(Clone, Debug)]
pub struct IdCopy {
    pub base: Ucbit,
    pub pru: Arc<PruFamily>,
}

impl IdCopy {
    pub fn new(base: Ucbit, lambda: usize, mode: PruMode) -> Result<Self> {
        let dim = 1usize << base.randomness_len().max(1);
        Ok(IdCopy { base, pru: Arc::new(PruFamily::new(lambda, dim, mode)?) })
    }

    /// The pure ciphertext for unitary key `k`, with its `(A, B)` split.
    pub fn pure_ciphertext(&self, ek: &UcbitKey, m: &Bits, k: &Bits, tag: &str) -> Result<PureEncoding> {
        m.check_len(1)?;
        let enc = self.base.pure_encoding(ek, m.get(0), tag)?;
        let mut mem = QuantumMemory::from_state(enc.state.clone());
        self.pru.apply(k, &mut mem, &enc.b)?;
        let mut names = enc.a.clone();
        names.push(enc.b.clone());
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let state = pure_from_memory(&mem, &refs)?;
        Ok(PureEncoding { state, a: enc.a, b: enc.b })
    }
}

fn pure_from_memory(mem: &QuantumMemory, names: &[&str]) -> Result<PureState> {
    let rho = mem.reduced(names)?;
    let (vals, vecs) = {
        let eig = rho.matrix().clone().symmetric_eigen();
        (eig.eigenvalues, eig.eigenvectors)
    };
    let (idx, top) = vals.iter().enumerate().fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    if (top - 1.0).abs() > 1e-9 {
        return Err(Error::Invariant(format!("expected a pure state, top eigenvalue {top}")));
    }
    PureState::new(rho.layout().clone(), vecs.column(idx).into_owned())
}

impl Scheme for IdCopy {
    type Ek = UcbitKey;
    type Dk = UcbitKey;
    type Ct = IdCopyCt<UcbitCt>;

    fn name(&self) -> String {
        format!("idcopy({})", self.base.name())
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "compiler": "idcopy",
            "base": self.base.describe(),
            "pru": { "mode": self.pru.mode, "lambda": self.pru.lambda, "dim": self.pru.dim },
        })
    }

    fn message_len(&self) -> usize {
        1
    }

    fn is_normal_form(&self) -> bool {
        self.base.is_normal_form()
    }

    fn gen(&self, rng: &mut Stream) -> Result<(UcbitKey, UcbitKey)> {
        self.base.gen(rng)
    }

    fn enc(&self, ek: &UcbitKey, m: &Bits, mem: &mut QuantumMemory, tag: &str, rng: &mut Stream) -> Result<Self::Ct> {
        m.check_len(1)?;
        let k = self.pru.key_gen(rng);
        let enc = self.base.pure_encoding(ek, m.get(0), tag)?;
        mem.insert(enc.state)?;
        self.pru.apply(&k, mem, &enc.b)?;
        Ok(IdCopyCt { inner: UcbitCt { qubits: enc.a }, purifier: enc.b })
    }

    fn dec(&self, dk: &UcbitKey, ct: &Self::Ct, mem: &mut QuantumMemory, rng: &mut Stream) -> Result<Bits> {
        self.base.dec(dk, &ct.inner, mem, rng)
    }

    fn dec_distribution(&self, dk: &UcbitKey, ct: &Self::Ct, mem: &QuantumMemory) -> Result<BTreeMap<Bits, f64>> {
        self.base.dec_distribution(dk, &ct.inner, mem)
    }
}

/// The compiler over any scheme, represented by its single-copy state
/// averaged over an ideal unitary key: a base ciphertext next to a purifier
/// in a uniformly random basis state. Exact for one copy, so this scheme
/// does not claim purity and refuses to hand out several identical copies.
#[derive(Clone, Debug)]
pub struct IdCopySingle<S> {
    pub base: S,
    pub purifier_dim: usize,
}

impl<S: Scheme> IdCopySingle<S> {
    pub fn new(base: S, purifier_dim: usize) -> Result<Self> {
        if purifier_dim < 2 {
            return Err(Error::Config("purifier dimension must be at least 2".into()));
        }
        Ok(IdCopySingle { base, purifier_dim })
    }
}

impl<S: Scheme> Scheme for IdCopySingle<S> {
    type Ek = S::Ek;
    type Dk = S::Dk;
    type Ct = IdCopyCt<S::Ct>;

    fn name(&self) -> String {
        format!("idcopy({})", self.base.name())
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "compiler": "idcopy",
            "base": self.base.describe(),
            "pru": { "mode": PruMode::Ideal, "representation": "single-copy", "dim": self.purifier_dim },
        })
    }

    fn message_len(&self) -> usize {
        self.base.message_len()
    }

    fn is_normal_form(&self) -> bool {
        self.base.is_normal_form()
    }

    fn is_pure(&self) -> bool {
        false
    }

    fn gen(&self, rng: &mut Stream) -> Result<(S::Ek, S::Dk)> {
        self.base.gen(rng)
    }

    fn enc(&self, ek: &S::Ek, m: &Bits, mem: &mut QuantumMemory, tag: &str, rng: &mut Stream) -> Result<Self::Ct> {
        let inner = self.base.enc(ek, m, mem, tag, rng)?;
        let purifier = format!("{tag}.purifier");
        let layout = RegisterLayout::single(&purifier, self.purifier_dim)?;
        mem.insert(PureState::basis(layout, &[rng.random_range(0..self.purifier_dim)])?)?;
        Ok(IdCopyCt { inner, purifier })
    }

    fn dec(&self, dk: &S::Dk, ct: &Self::Ct, mem: &mut QuantumMemory, rng: &mut Stream) -> Result<Bits> {
        self.base.dec(dk, &ct.inner, mem, rng)
    }

    fn dec_distribution(&self, dk: &S::Dk, ct: &Self::Ct, mem: &QuantumMemory) -> Result<BTreeMap<Bits, f64>> {
        self.base.dec_distribution(dk, &ct.inner, mem)
    }
}
