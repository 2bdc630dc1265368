//! Experiment configuration: one JSON document with a `version` field.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uclab::compilers::PruMode;
use uclab::games::GameKind;
use uclab::ucbit::{Ucbit, UcbitMode};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub stack: StackConfig,
    #[serde(default)]
    pub roundtrip: RoundtripConfig,
    #[serde(default)]
    pub twirl: Option<TwirlSection>,
    #[serde(default)]
    pub game: Option<GameSection>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StackConfig {
    #[serde(default = "default_base")]
    pub base: UcbitMode,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_lambda")]
    pub lambda: usize,
    #[serde(default = "default_message_len")]
    pub message_len: usize,
    #[serde(default = "default_pru")]
    pub pru: PruMode,
}

fn default_base() -> UcbitMode {
    UcbitMode::ConjugateCoding
}

fn default_n() -> usize {
    2
}

fn default_lambda() -> usize {
    16
}

fn default_message_len() -> usize {
    2
}

fn default_pru() -> PruMode {
    PruMode::Ideal
}

impl Default for StackConfig {
    fn default() -> Self {
        StackConfig { base: default_base(), n: default_n(), lambda: default_lambda(), message_len: default_message_len(), pru: default_pru() }
    }
}

impl StackConfig {
    pub fn base(&self) -> uclab::Result<Ucbit> {
        Ucbit::new(self.n, self.base)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RoundtripConfig {
    /// Keys sampled per layer.
    #[serde(default = "default_keys")]
    pub keys: usize,
    /// Decrypt with an independently generated key; failures are expected.
    #[serde(default)]
    pub corrupt_key: bool,
}

fn default_keys() -> usize {
    8
}

impl Default for RoundtripConfig {
    fn default() -> Self {
        RoundtripConfig { keys: default_keys(), corrupt_key: false }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TwirlSection {
    pub n: usize,
    pub m: usize,
    pub t: Vec<usize>,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default)]
    pub mc_pairs: usize,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_mc_tolerance")]
    pub mc_tolerance: f64,
}

fn default_pairs() -> usize {
    20
}

fn default_mc_samples() -> usize {
    20_000
}

fn default_tolerance() -> f64 {
    1e-8
}

fn default_mc_tolerance() -> f64 {
    0.02
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Ucbit,
    Expand,
    NormalForm,
    Idcopy,
    Ske,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    Guessing,
    Copy,
    Honest,
    Bb84Broadcast,
    OracleMatch,
    PrefixMatch,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    pub game: GameKind,
    #[serde(default = "one")]
    pub t: usize,
    #[serde(default = "two")]
    pub t_prime: usize,
    pub trials: u64,
    pub scheme: Target,
    pub strategy: StrategyName,
    /// Also run the strategy through the reduction against the base scheme
    /// and report both win rates.
    #[serde(default)]
    pub reduction: bool,
    #[serde(default)]
    pub degenerate: bool,
    #[serde(default)]
    pub reveal_key: bool,
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

fn one() -> usize {
    1
}

fn two() -> usize {
    2
}

#[derive(Debug)]
pub enum ConfigError {
    Read(String),
    Parse(String),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Read(m) => write!(f, "cannot read config: {m}"),
            ConfigError::Parse(m) => write!(f, "invalid config: {m}"),
            ConfigError::Invalid(m) => write!(f, "invalid config: {m}"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(ConfigError::Invalid(format!("version: expected {CONFIG_VERSION}, got {}", cfg.version)));
        }
        cfg.stack.base().map_err(|e| ConfigError::Invalid(format!("stack.n: {e}")))?;
        if cfg.stack.lambda == 0 {
            return Err(ConfigError::Invalid("stack.lambda: must be positive".into()));
        }
        if cfg.stack.message_len == 0 || cfg.stack.message_len > 8 {
            return Err(ConfigError::Invalid(format!("stack.message_len: {} outside 1..=8", cfg.stack.message_len)));
        }
        if cfg.roundtrip.keys == 0 {
            return Err(ConfigError::Invalid("roundtrip.keys: must be positive".into()));
        }
        if let Some(tw) = &cfg.twirl {
            if tw.t.is_empty() {
                return Err(ConfigError::Invalid("twirl.t: list at least one copy count".into()));
            }
            if tw.pairs == 0 || tw.mc_pairs > tw.pairs {
                return Err(ConfigError::Invalid("twirl.mc_pairs: must not exceed twirl.pairs, which must be positive".into()));
            }
        }
        if let Some(g) = &cfg.game {
            if g.trials == 0 {
                return Err(ConfigError::Invalid("game.trials: must be positive".into()));
            }
        }
        Ok(cfg)
    }
}
