//! Turns an adversary against the expanded scheme into one against the
//! one-bit CLONE game.
//!
//! The wrapper samples the whole SKE key grid itself. Oracle queries for `m`
//! are answered with a garbled `C[m]` whose labels for both values of every
//! `dk¹` bit are encrypted. The challenge becomes a garbled `D[m0, m1]` whose
//! quantum input is the one-bit challenge ciphertext, again with both labels
//! encrypted. Once a party learns `dk¹` it selects `ek_{i, dk¹_i}` from the
//! grid and runs the wrapped party on the resulting expanded key.

use std::sync::Arc;

use super::{Choice, EncOracle, Extra, Share, Strategy};
use crate::bits::Bits;
use crate::compilers::{constant_circuit, select_circuit, Expanded, ExpandedCt, GridCore, SelectedKey};
use crate::dqre::Dqre;
use crate::error::{Error, Result};
use crate::qstate::QuantumMemory;
use crate::rng::Stream;
use crate::scheme::Scheme;
use crate::symcrypto::ClassicalCiphertext;
use crate::ucbit::{Ucbit, UcbitCt, UcbitKey};

pub struct ReductionWrap<D: Dqre, St> {
    pub expanded: Expanded<D>,
    pub inner: St,
}

struct WrapState {
    keys: Arc<Vec<[Bits; 2]>>,
    /// `dk¹` bits, present only in the hybrid experiment.
    hybrid: Option<Bits>,
    inner: Choice,
}

struct WrapShare<C> {
    keys: Arc<Vec<[Bits; 2]>>,
    inner: Share<C>,
}

fn grid_entry<D: Dqre>(
    core: &GridCore<D>,
    keys: &[[Bits; 2]],
    hybrid: Option<&Bits>,
    i: usize,
    b: bool,
    label: Bits,
    rng: &mut Stream,
) -> Result<ClassicalCiphertext> {
    let msg = match hybrid {
        Some(dk1) if dk1.get(i) != b => Bits::zeros(label.len()),
        _ => label,
    };
    core.ske.enc(&keys[i][b as usize], &msg, rng)
}

/// `Enc(ek, ·)` of the expanded scheme, answered without `dk¹`.
struct SimulatedOracle<'a, D: Dqre> {
    core: &'a GridCore<D>,
    keys: &'a [[Bits; 2]],
    hybrid: Option<&'a Bits>,
    rng: Stream,
    count: usize,
}

impl<D: Dqre> EncOracle<Expanded<D>> for SimulatedOracle<'_, D> {
    fn encrypt(&mut self, m: &Bits, mem: &mut QuantumMemory) -> Result<ExpandedCt<D::Encoded>> {
        m.check_len(self.core.msg_len).map_err(|e| Error::Protocol(format!("oracle query: {e}")))?;
        let circuit = constant_circuit(&self.core.base.decoder_shape(), m)?;
        let (core, keys, hybrid) = (self.core, self.keys, self.hybrid);
        let mut entry = |i: usize, b: bool, label: Bits, rng: &mut Stream| grid_entry(core, keys, hybrid, i, b, label, rng);
        let tag = format!("so{}", self.count);
        self.count += 1;
        self.core.encrypt_circuit(&circuit, None, &mut entry, mem, &tag, &mut self.rng)
    }

    fn queries(&self) -> usize {
        self.count
    }
}

impl<D: Dqre, St> ReductionWrap<D, St>
where
    St: Strategy<Expanded<D>>,
{
    pub fn new(expanded: Expanded<D>, inner: St) -> Self {
        ReductionWrap { expanded, inner }
    }

    fn check(&self, scheme: &Ucbit) -> Result<()> {
        if *scheme != self.expanded.core.base {
            return Err(Error::Config(format!(
                "wrapped strategy targets {} with n = {}, game runs {} with n = {}",
                self.expanded.core.base.name(),
                self.expanded.core.base.n,
                scheme.name(),
                scheme.n
            )));
        }
        Ok(())
    }
}

fn state<T: 'static>(extra: &Option<Extra>) -> Result<&T> {
    extra.as_ref().and_then(|e| e.downcast_ref::<T>()).ok_or_else(|| Error::Protocol("reduction state missing".into()))
}

impl<D, St> Strategy<Ucbit> for ReductionWrap<D, St>
where
    D: Dqre,
    D::Encoded: 'static,
    St: Strategy<Expanded<D>>,
{
    fn name(&self) -> String {
        format!("wrap({})", self.inner.name())
    }

    fn choose(&self, scheme: &Ucbit, oracle: &mut dyn EncOracle<Ucbit>, mem: &mut QuantumMemory, rng: &mut Stream) -> Result<Choice> {
        self.check(scheme)?;
        let core = &self.expanded.core;
        let keys: Vec<[Bits; 2]> = (0..core.grid_len()).map(|_| [core.ske.gen(rng), core.ske.gen(rng)]).collect();
        let hybrid = oracle.revealed_key().map(UcbitKey::dk_bits);
        let inner = {
            let mut sim = SimulatedOracle { core, keys: &keys, hybrid: hybrid.as_ref(), rng: rng.fork(), count: 0 };
            self.inner.choose(&self.expanded, &mut sim, mem, rng)?
        };
        for m in [&inner.m0, &inner.m1] {
            m.check_len(core.msg_len).map_err(|e| Error::Protocol(format!("challenge message: {e}")))?;
        }
        let (m0, m1) = super::distinct_pair(1);
        let st = WrapState { keys: Arc::new(keys), hybrid, inner };
        Ok(Choice { m0, m1, st: Bits::default(), extra: Some(Arc::new(st)) })
    }

    fn split(&self, _: &Ucbit, choice: &Choice, cts: Vec<UcbitCt>, mem: &mut QuantumMemory, t_prime: usize, rng: &mut Stream) -> Result<Vec<Share<UcbitCt>>> {
        let st: &WrapState = state(&choice.extra)?;
        let core = &self.expanded.core;
        let circuit = select_circuit(&core.base.decoder_shape(), &st.inner.m0, &st.inner.m1)?;
        let mut expanded_cts = Vec::with_capacity(cts.len());
        for (j, ct) in cts.iter().enumerate() {
            let mut entry = |i: usize, b: bool, label: Bits, rng: &mut Stream| grid_entry(core, &st.keys, st.hybrid.as_ref(), i, b, label, rng);
            expanded_cts.push(core.encrypt_circuit(&circuit, Some(&ct.qubits), &mut entry, mem, &format!("rw{j}"), rng)?);
        }
        let inner = self.inner.split(&self.expanded, &st.inner, expanded_cts, mem, t_prime, rng)?;
        Ok(inner
            .into_iter()
            .map(|s| Share {
                registers: s.registers.clone(),
                cts: Vec::new(),
                classical: Bits::default(),
                extra: Some(Arc::new(WrapShare { keys: st.keys.clone(), inner: s }) as Extra),
            })
            .collect())
    }

    fn guess(&self, _: &Ucbit, party: usize, dk: &UcbitKey, share: &Share<UcbitCt>, mem: &mut QuantumMemory, rng: &mut Stream) -> Result<bool> {
        let ws: &WrapShare<ExpandedCt<D::Encoded>> = state(&share.extra)?;
        let bits = dk.dk_bits();
        let keys = ws.keys.iter().enumerate().map(|(i, pair)| pair[bits.get(i) as usize].clone()).collect();
        let dk_re = SelectedKey { keys, dk1: dk.clone() };
        self.inner.guess(&self.expanded, party, &dk_re, &ws.inner, mem, rng)
    }
}
