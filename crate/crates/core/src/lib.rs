//! Uncloneable-encryption compilers at desk scale: a dense quantum-state
//! simulator, Haar twirls, one-bit base schemes, a decomposable quantum
//! randomized encoding, the expansion and identical-copy compilers, and
//! executable security games.

pub mod bits;
pub mod compilers;
pub mod dqre;
pub mod error;
pub mod games;
pub mod qstate;
pub mod rng;
pub mod scheme;
pub mod stats;
pub mod symcrypto;
pub mod twirl;
pub mod ucbit;

pub use error::{Error, Result};
