use thiserror::Error;

/// Errors raised across the crate.
///
/// Numerical invariant violations (non-Hermitian input, zero-norm measurement
/// branch) are reported rather than panicking so that harnesses can surface
/// them as runtime assertion failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension cap exceeded: {requested} > {cap}")]
    DimensionCap { requested: usize, cap: usize },

    #[error("invalid register layout: {0}")]
    Layout(String),

    #[error("unknown register `{0}`")]
    UnknownRegister(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("layout mismatch between operands")]
    LayoutMismatch,

    #[error("state invariant violated: {0}")]
    Invariant(String),

    #[error("measurement branch has zero norm (numerical corruption)")]
    ZeroNormBranch,

    #[error("length mismatch: expected {expected} bits, got {got}")]
    Length { expected: usize, got: usize },

    #[error("singular Gram matrix for t={t}, d={d}")]
    SingularGram { t: usize, d: usize },

    #[error("invalid twirl configuration: {0}")]
    TwirlConfig(String),

    #[error("purification dimension {m} is smaller than rank {rank}")]
    RankTooLarge { m: usize, rank: usize },

    #[error("malformed garbled evaluation: {0}")]
    GarbledEval(String),

    #[error("circuit outside the supported class: {0}")]
    CircuitClass(String),

    #[error("inconsistent labels: {0}")]
    Labels(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("adversary protocol violation: {0}")]
    Protocol(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
