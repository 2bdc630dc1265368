//! IND and PR games for classical schemes.
//!
//! In the PR game the ideal challenge is a uniformly random string of the
//! ciphertext length, which is the maximally mixed state on classical
//! registers.

use rand::Rng;
use rayon::prelude::*;

use super::{distinct_pair, GameConfig, GameKind, GameStats, TrialRecord};
use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::symcrypto::ClassicalScheme;

pub type ClassicalOracle<'a> = dyn FnMut(&Bits) -> Result<Bits> + 'a;

/// Adversary for both classical games. In the PR game only `m0` of the
/// chosen pair is encrypted, and the guess is 1 for "uniformly random".
pub trait ClassicalAdversary<C: ClassicalScheme>: Send + Sync {
    fn name(&self) -> String;
    fn choose(&self, scheme: &C, oracle: &mut ClassicalOracle<'_>, rng: &mut Stream) -> Result<(Bits, Bits)>;
    fn guess(&self, scheme: &C, pair: (&Bits, &Bits), ct: &Bits, oracle: &mut ClassicalOracle<'_>, rng: &mut Stream) -> Result<bool>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ClassicalGuess;

impl<C: ClassicalScheme> ClassicalAdversary<C> for ClassicalGuess {
    fn name(&self) -> String {
        "guessing".into()
    }

    fn choose(&self, scheme: &C, _: &mut ClassicalOracle<'_>, _: &mut Stream) -> Result<(Bits, Bits)> {
        Ok(distinct_pair(scheme.msg_len()))
    }

    fn guess(&self, _: &C, _: (&Bits, &Bits), _: &Bits, _: &mut ClassicalOracle<'_>, rng: &mut Stream) -> Result<bool> {
        Ok(rng.random())
    }
}

/// Re-encrypts `m0` through the oracle and guesses 0 iff the challenge
/// matches. Breaks deterministic schemes.
#[derive(Clone, Copy, Debug, Default)]
pub struct OracleMatch;

impl<C: ClassicalScheme> ClassicalAdversary<C> for OracleMatch {
    fn name(&self) -> String {
        "oracle-match".into()
    }

    fn choose(&self, scheme: &C, _: &mut ClassicalOracle<'_>, _: &mut Stream) -> Result<(Bits, Bits)> {
        Ok(distinct_pair(scheme.msg_len()))
    }

    fn guess(&self, _: &C, pair: (&Bits, &Bits), ct: &Bits, oracle: &mut ClassicalOracle<'_>, _: &mut Stream) -> Result<bool> {
        Ok(oracle(pair.0)? != *ct)
    }
}

/// Guesses 0 iff the challenge starts with `m0`. Breaks schemes that leave
/// the message in the clear.
#[derive(Clone, Copy, Debug, Default)]
pub struct PrefixMatch;

impl<C: ClassicalScheme> ClassicalAdversary<C> for PrefixMatch {
    fn name(&self) -> String {
        "prefix-match".into()
    }

    fn choose(&self, scheme: &C, _: &mut ClassicalOracle<'_>, _: &mut Stream) -> Result<(Bits, Bits)> {
        Ok(distinct_pair(scheme.msg_len()))
    }

    fn guess(&self, _: &C, pair: (&Bits, &Bits), ct: &Bits, _: &mut ClassicalOracle<'_>, _: &mut Stream) -> Result<bool> {
        let m0 = pair.0;
        Ok(ct.len() < m0.len() || ct.slice(0, m0.len()) != *m0)
    }
}

fn describe<C: ClassicalScheme>(scheme: &C) -> serde_json::Value {
    serde_json::json!({ "msg_len": scheme.msg_len(), "ct_len": scheme.ct_len() })
}

fn play<C: ClassicalScheme, A: ClassicalAdversary<C> + ?Sized>(cfg: &GameConfig, scheme: &C, adv: &A, trial: u64) -> Result<TrialRecord> {
    let rng = Stream::new(cfg.seed).substream("trial", trial);
    let key = scheme.gen(&mut rng.substream("gen", 0));
    let mut oracle_rng = rng.substream("oracle", 0);
    let mut oracle = |m: &Bits| {
        m.check_len(scheme.msg_len()).map_err(|e| Error::Protocol(format!("oracle query: {e}")))?;
        scheme.enc(&key, m, &mut oracle_rng)
    };
    let mut adv_rng = rng.substream("adversary", 0);
    let (m0, m1) = adv.choose(scheme, &mut oracle, &mut adv_rng)?;
    for m in [&m0, &m1] {
        m.check_len(scheme.msg_len()).map_err(|e| Error::Protocol(format!("challenge message: {e}")))?;
    }
    let b = rng.substream("coin", 0).random::<bool>();
    let mut ch = rng.substream("challenge", 0);
    let ct = match cfg.game {
        GameKind::Ind => scheme.enc(&key, if b { &m1 } else { &m0 }, &mut ch)?,
        _ if b => Bits::random(scheme.ct_len(), &mut ch),
        _ => scheme.enc(&key, &m0, &mut ch)?,
    };
    let g = adv.guess(scheme, (&m0, &m1), &ct, &mut oracle, &mut adv_rng)?;
    Ok(TrialRecord { trial, b, guesses: Bits::from_bools(vec![g]), win: g == b })
}

fn run<C: ClassicalScheme, A: ClassicalAdversary<C> + ?Sized>(cfg: &GameConfig, scheme: &C, adv: &A) -> Result<GameStats> {
    let records = (0..cfg.trials).into_par_iter().map(|i| play(cfg, scheme, adv, i)).collect::<Result<Vec<_>>>()?;
    Ok(GameStats::finish(cfg, describe(scheme), adv.name(), records))
}

pub fn run_ind<C: ClassicalScheme, A: ClassicalAdversary<C> + ?Sized>(cfg: &GameConfig, scheme: &C, adv: &A) -> Result<GameStats> {
    cfg.expect(GameKind::Ind)?;
    run(cfg, scheme, adv)
}

pub fn run_pr<C: ClassicalScheme, A: ClassicalAdversary<C> + ?Sized>(cfg: &GameConfig, scheme: &C, adv: &A) -> Result<GameStats> {
    cfg.expect(GameKind::Pr)?;
    run(cfg, scheme, adv)
}
