//! Security games run as Monte Carlo experiments.
//!
//! Each trial draws its randomness from `Stream::new(seed).substream("trial", i)`,
//! so trials run in parallel and reports are reproducible byte for byte.
//! Adversaries pass quantum registers explicitly: after the split, party `i`
//! sees only the registers and classical data in its [`Share`].

pub mod classical;
pub mod reduction;
pub mod strategies;
#[cfg(test)]
mod tests;

use std::any::Any;
use std::collections::HashSet;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::qstate::QuantumMemory;
use crate::rng::Stream;
use crate::scheme::{Ciphertext, Scheme};
use crate::stats::Estimate;

pub use classical::{run_ind, run_pr, ClassicalAdversary, ClassicalGuess, OracleMatch, PrefixMatch};
pub use reduction::ReductionWrap;
pub use strategies::{distinct_pair, Bb84Broadcast, CopyForward, Guessing, HonestDecryptor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    Ind,
    Pr,
    Clone,
    #[serde(rename = "idclone")]
    IdClone,
}

impl GameKind {
    pub fn is_cloning(self) -> bool {
        matches!(self, GameKind::Clone | GameKind::IdClone)
    }
}

fn one() -> usize {
    1
}

fn two() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub game: GameKind,
    #[serde(default = "one")]
    pub t: usize,
    #[serde(default = "two")]
    pub t_prime: usize,
    pub trials: u64,
    pub seed: u64,
    /// Allows `t' ≤ t`; used for the honest-decryptor check at `t' = 1`.
    #[serde(default)]
    pub degenerate: bool,
    /// Lets the oracle hand the decryption key to a reduction, which the
    /// hybrid experiment needs to zero out unselected grid entries.
    #[serde(default)]
    pub reveal_key: bool,
}

impl GameConfig {
    pub fn new(game: GameKind, trials: u64, seed: u64) -> Self {
        GameConfig { game, t: 1, t_prime: 2, trials, seed, degenerate: false, reveal_key: false }
    }

    pub fn copies(mut self, t: usize, t_prime: usize) -> Self {
        self.t = t;
        self.t_prime = t_prime;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.game.is_cloning() {
            if self.t == 0 || self.t_prime == 0 {
                return Err(Error::Config("t and t' must be positive".into()));
            }
            if self.t >= self.t_prime && !self.degenerate {
                return Err(Error::Config(format!("cloning games need t < t', got t = {}, t' = {}", self.t, self.t_prime)));
            }
        }
        Ok(())
    }

    fn expect(&self, kind: GameKind) -> Result<()> {
        if self.game != kind {
            return Err(Error::Config(format!("config is for {:?}, not {kind:?}", self.game)));
        }
        self.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub b: bool,
    pub guesses: Bits,
    pub win: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GameStats {
    pub game: GameKind,
    pub t: usize,
    pub t_prime: usize,
    pub trials: u64,
    pub wins: u64,
    pub estimate: f64,
    pub ci: [f64; 2],
    pub seed: u64,
    pub scheme: serde_json::Value,
    pub strategy: String,
    #[serde(skip)]
    pub transcripts: Vec<TrialRecord>,
}

impl GameStats {
    fn finish(cfg: &GameConfig, scheme: serde_json::Value, strategy: String, transcripts: Vec<TrialRecord>) -> Self {
        let est = stats_aggregate(&transcripts);
        let (t, t_prime) = if cfg.game.is_cloning() { (cfg.t, cfg.t_prime) } else { (0, 0) };
        GameStats {
            game: cfg.game,
            t,
            t_prime,
            trials: est.trials,
            wins: est.wins,
            estimate: est.estimate,
            ci: [est.ci.0, est.ci.1],
            seed: cfg.seed,
            scheme,
            strategy,
            transcripts,
        }
    }

    pub fn as_estimate(&self) -> Estimate {
        Estimate::new(self.wins, self.trials)
    }

    /// Interval for the advantage `2p - 1` over guessing.
    pub fn advantage_ci(&self) -> (f64, f64) {
        (2.0 * self.ci[0] - 1.0, 2.0 * self.ci[1] - 1.0)
    }

    /// One CSV row per trial.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        out.write_record(["trial", "b", "guesses", "win"]).map_err(io)?;
        for r in &self.transcripts {
            out.write_record([r.trial.to_string(), (r.b as u8).to_string(), r.guesses.to_string(), (r.win as u8).to_string()])
                .map_err(io)?;
        }
        out.flush().map_err(|e| Error::Io(e.to_string()))
    }
}

pub fn stats_aggregate(transcripts: &[TrialRecord]) -> Estimate {
    let wins = transcripts.iter().filter(|r| r.win).count() as u64;
    Estimate::new(wins, transcripts.len() as u64)
}

/// Opaque per-strategy data carried from one phase to the next.
pub type Extra = Arc<dyn Any + Send + Sync>;

/// Output of the challenger phase.
#[derive(Clone)]
pub struct Choice {
    pub m0: Bits,
    pub m1: Bits,
    /// Classical state kept for the splitter.
    pub st: Bits,
    pub extra: Option<Extra>,
}

impl Choice {
    pub fn new(m0: Bits, m1: Bits, st: Bits) -> Self {
        Choice { m0, m1, st, extra: None }
    }
}

/// What one party receives from the splitter.
#[derive(Clone)]
pub struct Share<C> {
    pub registers: Vec<String>,
    pub cts: Vec<C>,
    pub classical: Bits,
    pub extra: Option<Extra>,
}

impl<C> Share<C> {
    pub fn classical(classical: Bits) -> Self {
        Share { registers: Vec::new(), cts: Vec::new(), classical, extra: None }
    }
}

pub trait EncOracle<S: Scheme> {
    fn encrypt(&mut self, m: &Bits, mem: &mut QuantumMemory) -> Result<S::Ct>;
    fn queries(&self) -> usize;
    /// The decryption key, only when the game is configured to reveal it.
    fn revealed_key(&self) -> Option<&S::Dk> {
        None
    }
}

/// The live `Enc(ek, ·)` oracle of a game.
pub struct GameOracle<'a, S: Scheme> {
    pub scheme: &'a S,
    pub ek: &'a S::Ek,
    pub dk: Option<&'a S::Dk>,
    pub rng: Stream,
    count: usize,
}

impl<'a, S: Scheme> GameOracle<'a, S> {
    pub fn new(scheme: &'a S, ek: &'a S::Ek, rng: Stream) -> Self {
        GameOracle { scheme, ek, dk: None, rng, count: 0 }
    }

    pub fn tag(index: usize) -> String {
        format!("o{index}")
    }
}

impl<S: Scheme> EncOracle<S> for GameOracle<'_, S> {
    fn encrypt(&mut self, m: &Bits, mem: &mut QuantumMemory) -> Result<S::Ct> {
        m.check_len(self.scheme.message_len()).map_err(|e| Error::Protocol(format!("oracle query: {e}")))?;
        let tag = Self::tag(self.count);
        self.count += 1;
        self.scheme.enc(self.ek, m, mem, &tag, &mut self.rng)
    }

    fn queries(&self) -> usize {
        self.count
    }

    fn revealed_key(&self) -> Option<&S::Dk> {
        self.dk
    }
}

/// An adversary `(C, A_1, …, A_{t'})` for the cloning games.
pub trait Strategy<S: Scheme>: Send + Sync {
    fn name(&self) -> String;

    fn choose(&self, scheme: &S, oracle: &mut dyn EncOracle<S>, mem: &mut QuantumMemory, rng: &mut Stream) -> Result<Choice>;

    /// Maps the challenge to `t'` disjoint shares.
    fn split(
        &self,
        scheme: &S,
        choice: &Choice,
        cts: Vec<S::Ct>,
        mem: &mut QuantumMemory,
        t_prime: usize,
        rng: &mut Stream,
    ) -> Result<Vec<Share<S::Ct>>>;

    fn guess(&self, scheme: &S, party: usize, dk: &S::Dk, share: &Share<S::Ct>, mem: &mut QuantumMemory, rng: &mut Stream) -> Result<bool>;
}

fn check_partition<C: Ciphertext>(shares: &[Share<C>], mem: &QuantumMemory, t_prime: usize) -> Result<()> {
    if shares.len() != t_prime {
        return Err(Error::Protocol(format!("splitter produced {} shares for t' = {t_prime}", shares.len())));
    }
    let mut seen = HashSet::new();
    for (i, s) in shares.iter().enumerate() {
        for r in &s.registers {
            if !mem.contains(r) {
                return Err(Error::Protocol(format!("share {i} names missing register `{r}`")));
            }
            if !seen.insert(r.as_str()) {
                return Err(Error::Protocol(format!("register `{r}` assigned to more than one party")));
            }
        }
        let own: HashSet<&str> = s.registers.iter().map(String::as_str).collect();
        for ct in &s.cts {
            if let Some(r) = ct.registers().into_iter().find(|r| !own.contains(r.as_str())) {
                return Err(Error::Protocol(format!("share {i} holds a ciphertext on foreign register `{r}`")));
            }
        }
    }
    Ok(())
}

fn play<S: Scheme, St: Strategy<S> + ?Sized>(cfg: &GameConfig, scheme: &S, strategy: &St, trial: u64) -> Result<TrialRecord> {
    let rng = Stream::new(cfg.seed).substream("trial", trial);
    let (ek, dk) = scheme.gen(&mut rng.substream("gen", 0))?;
    let mut mem = QuantumMemory::new();
    let mut adv = rng.substream("adversary", 0);
    let choice = {
        let mut oracle = GameOracle::new(scheme, &ek, rng.substream("oracle", 0));
        if cfg.reveal_key {
            oracle.dk = Some(&dk);
        }
        strategy.choose(scheme, &mut oracle, &mut mem, &mut adv)?
    };
    for m in [&choice.m0, &choice.m1] {
        m.check_len(scheme.message_len()).map_err(|e| Error::Protocol(format!("challenge message: {e}")))?;
    }
    let b = rng.substream("coin", 0).random::<bool>();
    let mb = if b { &choice.m1 } else { &choice.m0 };
    let identical = cfg.game == GameKind::IdClone;
    let mut cts = Vec::with_capacity(cfg.t);
    for j in 0..cfg.t {
        // A single randomness r for identical copies; fresh randomness otherwise.
        let mut r = rng.substream("challenge", if identical { 0 } else { j as u64 });
        cts.push(scheme.enc(&ek, mb, &mut mem, &format!("ch{j}"), &mut r)?);
    }
    let shares = strategy.split(scheme, &choice, cts, &mut mem, cfg.t_prime, &mut adv)?;
    check_partition(&shares, &mem, cfg.t_prime)?;
    let mut guesses = Bits::default();
    for (i, share) in shares.iter().enumerate() {
        let mut party_rng = rng.substream("party", i as u64);
        let names: Vec<&str> = share.registers.iter().map(String::as_str).collect();
        // Parties whose registers are not entangled with the rest get a
        // private memory; otherwise they act locally on the shared one.
        let g = match mem.split_off(&names) {
            Ok(mut own) => strategy.guess(scheme, i, &dk, share, &mut own, &mut party_rng)?,
            Err(_) => strategy.guess(scheme, i, &dk, share, &mut mem, &mut party_rng)?,
        };
        guesses.push(g);
    }
    let win = guesses.iter().all(|g| g == b);
    Ok(TrialRecord { trial, b, guesses, win })
}

fn run_cloning<S: Scheme, St: Strategy<S> + ?Sized>(cfg: &GameConfig, scheme: &S, strategy: &St) -> Result<GameStats> {
    let records = (0..cfg.trials).into_par_iter().map(|i| play(cfg, scheme, strategy, i)).collect::<Result<Vec<_>>>()?;
    Ok(GameStats::finish(cfg, scheme.describe(), strategy.name(), records))
}

/// The CLONE game: `t` independent encryptions of `m_b`.
pub fn run_clone<S: Scheme, St: Strategy<S> + ?Sized>(cfg: &GameConfig, scheme: &S, strategy: &St) -> Result<GameStats> {
    cfg.expect(GameKind::Clone)?;
    run_cloning(cfg, scheme, strategy)
}

/// The IDCLONE game: `t` copies of one pure encryption of `m_b`.
pub fn run_idclone<S: Scheme, St: Strategy<S> + ?Sized>(cfg: &GameConfig, scheme: &S, strategy: &St) -> Result<GameStats> {
    cfg.expect(GameKind::IdClone)?;
    if !scheme.is_pure() && cfg.t > 1 {
        return Err(Error::Precondition(format!("{} is not pure, so identical copies are undefined", scheme.name())));
    }
    run_cloning(cfg, scheme, strategy)
}
