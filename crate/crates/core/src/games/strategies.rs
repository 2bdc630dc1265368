//! Reference adversaries for the cloning games.

use rand::Rng;

use super::{Choice, EncOracle, Share, Strategy};
use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::qstate::{CMatrix, PureState, QuantumMemory, RegisterLayout, UnitaryOp, C64};
use crate::rng::Stream;
use crate::scheme::{Ciphertext, Scheme};
use crate::ucbit::{Ucbit, UcbitKey};

/// `(0…0, 10…0)`.
pub fn distinct_pair(len: usize) -> (Bits, Bits) {
    let m0 = Bits::zeros(len);
    let mut m1 = m0.clone();
    if len > 0 {
        m1.set(0, true);
    }
    (m0, m1)
}

/// Ignores the challenge; every party outputs one coin drawn before the split.
#[derive(Clone, Copy, Debug, Default)]
pub struct Guessing;

impl<S: Scheme> Strategy<S> for Guessing {
    fn name(&self) -> String {
        "guessing".into()
    }

    fn choose(&self, scheme: &S, _: &mut dyn EncOracle<S>, _: &mut QuantumMemory, rng: &mut Stream) -> Result<Choice> {
        let (m0, m1) = distinct_pair(scheme.message_len());
        Ok(Choice::new(m0, m1, Bits::random(1, rng)))
    }

    fn split(&self, _: &S, choice: &Choice, _: Vec<S::Ct>, _: &mut QuantumMemory, t_prime: usize, _: &mut Stream) -> Result<Vec<Share<S::Ct>>> {
        Ok((0..t_prime).map(|_| Share::classical(choice.st.clone())).collect())
    }

    fn guess(&self, _: &S, _: usize, _: &S::Dk, share: &Share<S::Ct>, _: &mut QuantumMemory, _: &mut Stream) -> Result<bool> {
        Ok(share.classical.get(0))
    }
}

/// Measures every challenge register in the computational basis and hands
/// each party a fresh basis-state copy; party `i` decrypts copy `i mod t`.
/// Wins with certainty whenever ciphertexts are classical.
#[derive(Clone, Copy, Debug, Default)]
pub struct CopyForward;

fn decide<S: Scheme>(scheme: &S, dk: &S::Dk, ct: &S::Ct, m1: &Bits, mem: &mut QuantumMemory, rng: &mut Stream) -> Result<bool> {
    match scheme.dec(dk, ct, mem, rng) {
        Ok(m) => Ok(&m == m1),
        // A disturbed garbled ciphertext may simply fail to evaluate.
        Err(Error::GarbledEval(_)) | Err(Error::Labels(_)) => Ok(rng.random()),
        Err(e) => Err(e),
    }
}

impl<S: Scheme> Strategy<S> for CopyForward {
    fn name(&self) -> String {
        "copy".into()
    }

    fn choose(&self, scheme: &S, _: &mut dyn EncOracle<S>, _: &mut QuantumMemory, _: &mut Stream) -> Result<Choice> {
        let (m0, m1) = distinct_pair(scheme.message_len());
        Ok(Choice::new(m0, m1, Bits::default()))
    }

    fn split(&self, _: &S, choice: &Choice, cts: Vec<S::Ct>, mem: &mut QuantumMemory, t_prime: usize, rng: &mut Stream) -> Result<Vec<Share<S::Ct>>> {
        let mut seen = Vec::new();
        for ct in &cts {
            for r in ct.registers() {
                let d = mem.local_dim(&r)?;
                let v = mem.measure_digit(&r, rng)?;
                seen.push((r, d, v));
            }
        }
        let mut shares = Vec::with_capacity(t_prime);
        for i in 0..t_prime {
            let prefix = format!("p{i}.");
            let mut registers = Vec::with_capacity(seen.len());
            for (r, d, v) in &seen {
                let name = format!("{prefix}{r}");
                mem.insert(PureState::basis(RegisterLayout::single(&name, *d)?, &[*v])?)?;
                registers.push(name);
            }
            let copies = cts
                .iter()
                .map(|ct| {
                    let mut c = ct.clone();
                    c.rename(&|r| format!("{prefix}{r}"));
                    c
                })
                .collect();
            shares.push(Share { registers, cts: copies, classical: choice.m1.clone(), extra: None });
        }
        Ok(shares)
    }

    fn guess(&self, scheme: &S, party: usize, dk: &S::Dk, share: &Share<S::Ct>, mem: &mut QuantumMemory, rng: &mut Stream) -> Result<bool> {
        if share.cts.is_empty() {
            return Err(Error::Protocol("copy share without ciphertexts".into()));
        }
        decide(scheme, dk, &share.cts[party % share.cts.len()], &share.classical, mem, rng)
    }
}

/// Party 0 receives the whole challenge and decrypts it; other parties get
/// nothing. Meant for the degenerate `t' = 1` game.
#[derive(Clone, Copy, Debug, Default)]
pub struct HonestDecryptor;

impl<S: Scheme> Strategy<S> for HonestDecryptor {
    fn name(&self) -> String {
        "honest".into()
    }

    fn choose(&self, scheme: &S, _: &mut dyn EncOracle<S>, _: &mut QuantumMemory, _: &mut Stream) -> Result<Choice> {
        let (m0, m1) = distinct_pair(scheme.message_len());
        Ok(Choice::new(m0, m1, Bits::default()))
    }

    fn split(&self, _: &S, choice: &Choice, cts: Vec<S::Ct>, _: &mut QuantumMemory, t_prime: usize, _: &mut Stream) -> Result<Vec<Share<S::Ct>>> {
        let registers = cts.iter().flat_map(|c| c.registers()).collect();
        let mut shares = vec![Share { registers, cts, classical: choice.m1.clone(), extra: None }];
        shares.extend((1..t_prime).map(|_| Share::classical(choice.m1.clone())));
        Ok(shares)
    }

    fn guess(&self, scheme: &S, _: usize, dk: &S::Dk, share: &Share<S::Ct>, mem: &mut QuantumMemory, rng: &mut Stream) -> Result<bool> {
        match share.cts.first() {
            Some(ct) => Ok(scheme.dec(dk, ct, mem, rng)? == share.classical),
            None => Ok(false),
        }
    }
}

/// Against the one-bit scheme: measure each qubit of the first copy in a
/// random basis and broadcast bases and outcomes. A party whose key basis
/// matches every guessed basis decodes; otherwise all parties fall back to
/// a shared coin.
#[derive(Clone, Copy, Debug, Default)]
pub struct Bb84Broadcast;

impl Bb84Broadcast {
    /// Win probability from the encryption channel's density matrices,
    /// averaged over keys, messages and guessed bases.
    pub fn exact_win_probability(u: &Ucbit) -> Result<f64> {
        let n = u.n;
        let h = UnitaryOp::h();
        let (mut total, mut count) = (0.0, 0.0);
        for th in 0..1u64 << n {
            for s in 0..1u64 << n {
                let key = UcbitKey { theta: Bits::from_u64(th, n), s: Bits::from_u64(s, n) };
                for b in [false, true] {
                    let rho = u.channel_state(&key, b)?;
                    for beta in 0..1u64 << n {
                        let bases = Bits::from_u64(beta, n);
                        let p = if bases == key.theta {
                            let mut rot = CMatrix::from_element(1, 1, C64::from(1.0));
                            for i in 0..n {
                                rot = rot.kronecker(&if bases.get(i) { h.matrix().clone() } else { CMatrix::identity(2, 2) });
                            }
                            let m = &rot * rho.matrix() * rot.adjoint();
                            (0..1usize << n)
                                .filter(|&o| Bits::from_u64(o as u64, n).parity() ^ key.s.parity() == b)
                                .map(|o| m[(o, o)].re)
                                .sum()
                        } else {
                            0.5
                        };
                        total += p;
                        count += 1.0;
                    }
                }
            }
        }
        Ok(total / count)
    }
}

impl Strategy<Ucbit> for Bb84Broadcast {
    fn name(&self) -> String {
        "bb84-broadcast".into()
    }

    fn choose(&self, _: &Ucbit, _: &mut dyn EncOracle<Ucbit>, _: &mut QuantumMemory, _: &mut Stream) -> Result<Choice> {
        let (m0, m1) = distinct_pair(1);
        Ok(Choice::new(m0, m1, Bits::default()))
    }

    fn split(
        &self,
        scheme: &Ucbit,
        _: &Choice,
        cts: Vec<<Ucbit as Scheme>::Ct>,
        mem: &mut QuantumMemory,
        t_prime: usize,
        rng: &mut Stream,
    ) -> Result<Vec<Share<<Ucbit as Scheme>::Ct>>> {
        let ct = cts.first().ok_or_else(|| Error::Protocol("no challenge ciphertext".into()))?;
        let bases = Bits::random(scheme.n, rng);
        let mut outcomes = Bits::default();
        for (i, q) in ct.qubits.iter().enumerate() {
            if bases.get(i) {
                mem.apply(&UnitaryOp::h(), &[q.as_str()])?;
            }
            outcomes.push(mem.measure(&[q.as_str()], rng)?.get(0));
        }
        let coin = Bits::random(1, rng);
        let classical = bases.concat(&outcomes).concat(&coin);
        Ok((0..t_prime).map(|_| Share::classical(classical.clone())).collect())
    }

    fn guess(&self, scheme: &Ucbit, _: usize, dk: &UcbitKey, share: &Share<<Ucbit as Scheme>::Ct>, _: &mut QuantumMemory, _: &mut Stream) -> Result<bool> {
        let n = scheme.n;
        share.classical.check_len(2 * n + 1)?;
        let bases = share.classical.slice(0, n);
        if bases == dk.theta {
            Ok(share.classical.slice(n, 2 * n).parity() ^ dk.s.parity())
        } else {
            Ok(share.classical.get(2 * n))
        }
    }
}
