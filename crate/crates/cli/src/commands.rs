//! The three commands. Each returns a JSON report and whether every check
//! it ran passed.

use serde::Serialize;
use serde_json::Value;
use uclab::bits::Bits;
use uclab::compilers::{Expanded, IdCopy, IdCopySingle, NormalForm};
use uclab::games::{
    run_clone, run_idclone, run_ind, run_pr, Bb84Broadcast, ClassicalGuess, CopyForward, GameConfig, GameKind, GameStats,
    Guessing, HonestDecryptor, OracleMatch, PrefixMatch, ReductionWrap, Strategy,
};
use uclab::rng::Stream;
use uclab::scheme::{all_messages, success_probability, Scheme};
use uclab::stats::agree;
use uclab::symcrypto::{ClassicalScheme, Ske};
use uclab::twirl::{check_pure_channel, PureChannelReport, TwirlConfig};
use uclab::ucbit::{Ucbit, UcbitKey};
use uclab::Error;

use crate::config::{ExperimentConfig, GameSection, StackConfig, StrategyName, Target};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct Report<T> {
    pub schema_version: u32,
    pub command: &'static str,
    pub seed: u64,
    pub passed: bool,
    #[serde(flatten)]
    pub body: T,
}

pub struct Options {
    pub seed: u64,
    pub trials: Option<u64>,
    pub exact: bool,
}

#[derive(Serialize)]
pub struct LayerReport {
    pub layer: String,
    pub scheme: Value,
    pub mode: &'static str,
    pub cases: u64,
    pub failures: u64,
    pub success_rate: f64,
    pub min_success_probability: f64,
}

#[derive(Serialize)]
pub struct RoundtripBody {
    pub corrupt_key: bool,
    pub layers: Vec<LayerReport>,
}

const SUCCESS_TOL: f64 = 1e-9;

struct Tally {
    cases: u64,
    failures: u64,
    min_p: f64,
}

impl Tally {
    fn new() -> Self {
        Tally { cases: 0, failures: 0, min_p: 1.0 }
    }

    fn add(&mut self, p: f64) {
        self.cases += 1;
        if p < 1.0 - SUCCESS_TOL {
            self.failures += 1;
        }
        self.min_p = self.min_p.min(p);
    }

    fn finish(self, layer: String, scheme: Value, mode: &'static str) -> LayerReport {
        LayerReport {
            layer,
            scheme,
            mode,
            cases: self.cases,
            failures: self.failures,
            success_rate: (self.cases - self.failures) as f64 / self.cases as f64,
            min_success_probability: self.min_p,
        }
    }
}

fn quantum_layer<S: Scheme>(s: &S, keys: Vec<(S::Ek, S::Dk)>, exhaustive: bool, corrupt: bool, rng: &mut Stream) -> uclab::Result<LayerReport> {
    let mut tally = Tally::new();
    for (ek, dk) in keys {
        let dk = if corrupt { s.gen(rng)?.1 } else { dk };
        for m in all_messages(s.message_len()) {
            let mut mem = uclab::qstate::QuantumMemory::new();
            let ct = s.enc(&ek, &m, &mut mem, "rt", rng)?;
            let p = match success_probability(s, &dk, &ct, &mem, &m) {
                Ok(p) => p,
                // A wrong key can produce labels that do not evaluate at all.
                Err(Error::GarbledEval(_)) | Err(Error::Labels(_)) => 0.0,
                Err(e) => return Err(e),
            };
            tally.add(p);
        }
    }
    Ok(tally.finish(s.name(), s.describe(), if exhaustive { "exhaustive" } else { "sampled" }))
}

fn sampled_keys<S: Scheme>(s: &S, count: usize, rng: &mut Stream) -> uclab::Result<Vec<(S::Ek, S::Dk)>> {
    (0..count).map(|_| s.gen(rng)).collect()
}

fn ske_layer(ske: &Ske, keys: usize, corrupt: bool, rng: &mut Stream) -> uclab::Result<LayerReport> {
    let mut tally = Tally::new();
    for _ in 0..keys {
        let k = ClassicalScheme::gen(ske, rng);
        let dk = if corrupt { ClassicalScheme::gen(ske, rng) } else { k.clone() };
        for m in all_messages(ske.msg_len) {
            let ct = ClassicalScheme::enc(ske, &k, &m, rng)?;
            tally.add(if ClassicalScheme::dec(ske, &dk, &ct)? == m { 1.0 } else { 0.0 });
        }
    }
    let desc = serde_json::json!({ "scheme": "ske", "lambda": ske.lambda, "msg_len": ske.msg_len });
    Ok(tally.finish("ske".into(), desc, "sampled"))
}

pub fn roundtrip(cfg: &ExperimentConfig, opts: &Options) -> uclab::Result<(Report<RoundtripBody>, bool)> {
    let st = &cfg.stack;
    let base = st.base()?;
    let rc = &cfg.roundtrip;
    let root = Stream::new(opts.seed);
    let mut layers = Vec::new();

    let mut rng = root.substream("roundtrip/base", 0);
    let (keys, exhaustive) = if opts.exact {
        let all = (0..1u64 << base.dk_len())
            .map(|v| UcbitKey::from_dk_bits(&Bits::from_u64(v, base.dk_len())).map(|k| (k.clone(), k)))
            .collect::<uclab::Result<Vec<_>>>()?;
        (all, true)
    } else {
        (sampled_keys(&base, rc.keys, &mut rng)?, false)
    };
    layers.push(quantum_layer(&base, keys, exhaustive, rc.corrupt_key, &mut rng)?);

    let ske = Ske::new(st.lambda, st.message_len)?;
    layers.push(ske_layer(&ske, rc.keys, rc.corrupt_key, &mut root.substream("roundtrip/ske", 0))?);

    let expanded = Expanded::yao(base, st.lambda, st.message_len)?;
    let mut rng = root.substream("roundtrip/expand", 0);
    layers.push(quantum_layer(&expanded, sampled_keys(&expanded, rc.keys, &mut rng)?, false, rc.corrupt_key, &mut rng)?);

    let nf = NormalForm::yao(base, st.lambda, st.message_len)?;
    let mut rng = root.substream("roundtrip/nf", 0);
    layers.push(quantum_layer(&nf, sampled_keys(&nf, rc.keys, &mut rng)?, false, rc.corrupt_key, &mut rng)?);

    let id = IdCopy::new(base, st.lambda, st.pru)?;
    let mut rng = root.substream("roundtrip/idcopy", 0);
    layers.push(quantum_layer(&id, sampled_keys(&id, rc.keys, &mut rng)?, false, rc.corrupt_key, &mut rng)?);

    let id_nf = IdCopySingle::new(nf, 2)?;
    let mut rng = root.substream("roundtrip/idcopy-nf", 0);
    layers.push(quantum_layer(&id_nf, sampled_keys(&id_nf, rc.keys, &mut rng)?, false, rc.corrupt_key, &mut rng)?);

    let passed = layers.iter().all(|l| l.failures == 0);
    let body = RoundtripBody { corrupt_key: rc.corrupt_key, layers };
    Ok((Report { schema_version: SCHEMA_VERSION, command: "roundtrip", seed: opts.seed, passed, body }, passed))
}

#[derive(Serialize)]
pub struct TwirlCheck {
    #[serde(flatten)]
    pub report: PureChannelReport,
    pub tolerance: f64,
    pub mc_tolerance: f64,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct TwirlBody {
    pub checks: Vec<TwirlCheck>,
}

pub fn verify_twirl(cfg: &ExperimentConfig, opts: &Options) -> uclab::Result<(Report<TwirlBody>, bool)> {
    let tw = cfg.twirl.as_ref().ok_or_else(|| Error::Config("verify-twirl needs a `twirl` section".into()))?;
    let root = Stream::new(opts.seed);
    let mut checks = Vec::new();
    for &t in &tw.t {
        let tc = TwirlConfig::new(t, tw.n, tw.m)?;
        // Exact mode skips the sampled twirl.
        let mc_pairs = if opts.exact { 0 } else { tw.mc_pairs };
        let report = check_pure_channel(&tc, tw.pairs, mc_pairs, tw.mc_samples, &mut root.substream("twirl", t as u64))?;
        let passed = report.max_sim_distance <= tw.tolerance && report.max_mc_distance <= tw.mc_tolerance;
        checks.push(TwirlCheck { report, tolerance: tw.tolerance, mc_tolerance: tw.mc_tolerance, passed });
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok((Report { schema_version: SCHEMA_VERSION, command: "verify-twirl", seed: opts.seed, passed, body: TwirlBody { checks } }, passed))
}

#[derive(Serialize)]
pub struct Paired {
    pub wrapped: GameStats,
    pub difference: f64,
    pub combined_half_width: f64,
    pub agree: bool,
}

#[derive(Serialize)]
pub struct GameBody {
    pub stats: GameStats,
    /// Win probability from an exact oracle, when one exists for the
    /// strategy and `--exact` is given.
    pub exact: Option<f64>,
    pub paired: Option<Paired>,
}

fn mismatch(strategy: StrategyName, scheme: &str) -> Error {
    Error::Config(format!("strategy {strategy:?} does not apply to scheme {scheme}"))
}

fn cloning<S: Scheme, St: Strategy<S>>(g: &GameConfig, s: &S, st: &St) -> uclab::Result<GameStats> {
    match g.game {
        GameKind::Clone => run_clone(g, s, st),
        GameKind::IdClone => run_idclone(g, s, st),
        k => Err(Error::Config(format!("{k:?} needs a classical scheme"))),
    }
}

fn generic<S: Scheme>(g: &GameConfig, s: &S, name: StrategyName) -> uclab::Result<GameStats> {
    match name {
        StrategyName::Guessing => cloning(g, s, &Guessing),
        StrategyName::Copy => cloning(g, s, &CopyForward),
        StrategyName::Honest => cloning(g, s, &HonestDecryptor),
        other => Err(mismatch(other, &s.name())),
    }
}

fn wrapped(g: &GameConfig, base: &Ucbit, expanded: &Expanded, name: StrategyName) -> uclab::Result<GameStats> {
    if g.game != GameKind::Clone {
        return Err(Error::Config("the reduction runs in the CLONE game".into()));
    }
    match name {
        StrategyName::Guessing => run_clone(g, base, &ReductionWrap::new(expanded.clone(), Guessing)),
        StrategyName::Copy => run_clone(g, base, &ReductionWrap::new(expanded.clone(), CopyForward)),
        StrategyName::Honest => run_clone(g, base, &ReductionWrap::new(expanded.clone(), HonestDecryptor)),
        other => Err(mismatch(other, &expanded.name())),
    }
}

fn game_config(gs: &GameSection, opts: &Options) -> GameConfig {
    GameConfig {
        game: gs.game,
        t: gs.t,
        t_prime: gs.t_prime,
        trials: opts.trials.unwrap_or(gs.trials),
        seed: opts.seed,
        degenerate: gs.degenerate,
        reveal_key: gs.reveal_key,
    }
}

pub fn run_game(cfg: &ExperimentConfig, opts: &Options) -> uclab::Result<(Report<GameBody>, bool)> {
    let gs = cfg.game.as_ref().ok_or_else(|| Error::Config("run-game needs a `game` section".into()))?;
    let g = game_config(gs, opts);
    g.validate()?;
    let st: &StackConfig = &cfg.stack;
    let base = st.base()?;
    if gs.reduction && gs.scheme != Target::Expand {
        return Err(Error::Config("the reduction wraps strategies against the expanded scheme".into()));
    }
    let stats = match gs.scheme {
        Target::Ucbit => match gs.strategy {
            StrategyName::Bb84Broadcast => cloning(&g, &base, &Bb84Broadcast),
            other => generic(&g, &base, other),
        },
        Target::Expand => generic(&g, &Expanded::yao(base, st.lambda, st.message_len)?, gs.strategy),
        Target::NormalForm => generic(&g, &NormalForm::yao(base, st.lambda, st.message_len)?, gs.strategy),
        Target::Idcopy => generic(&g, &IdCopy::new(base, st.lambda, st.pru)?, gs.strategy),
        Target::Ske => {
            let ske = Ske::new(st.lambda, st.message_len)?;
            let run = |adv: &dyn uclab::games::ClassicalAdversary<Ske>| match g.game {
                GameKind::Ind => run_ind(&g, &ske, adv),
                GameKind::Pr => run_pr(&g, &ske, adv),
                k => Err(Error::Config(format!("{k:?} needs a quantum scheme"))),
            };
            match gs.strategy {
                StrategyName::Guessing => run(&ClassicalGuess),
                StrategyName::OracleMatch => run(&OracleMatch),
                StrategyName::PrefixMatch => run(&PrefixMatch),
                other => Err(mismatch(other, "ske")),
            }
        }
    }?;
    let exact = match (opts.exact, gs.strategy, gs.scheme) {
        (true, StrategyName::Bb84Broadcast, Target::Ucbit) if g.t == 1 => Some(Bb84Broadcast::exact_win_probability(&base)?),
        (true, StrategyName::Guessing, _) => Some(0.5),
        _ => None,
    };
    let paired = if gs.reduction {
        let expanded = Expanded::yao(base, st.lambda, st.message_len)?;
        let w = wrapped(&g, &base, &expanded, gs.strategy)?;
        let (a, b) = (stats.as_estimate(), w.as_estimate());
        Some(Paired {
            difference: w.estimate - stats.estimate,
            combined_half_width: a.half_width() + b.half_width(),
            agree: agree(&a, &b),
            wrapped: w,
        })
    } else {
        None
    };
    let body = GameBody { stats, exact, paired };
    Ok((Report { schema_version: SCHEMA_VERSION, command: "run-game", seed: opts.seed, passed: true, body }, true))
}
