//! Exact density-matrix simulation of distance-3 quantum error correction
//! under fully sequential gate operations.
//!
//! The crate provides:
//!
//! * a dense density-matrix engine with sparse embedded operators
//!   ([`dm`], [`sparse`], [`pauli`]),
//! * the error channels of the sequential model: depolarizing gates,
//!   phase-damping resting errors, initialisation and declaration errors
//!   ([`channels`]),
//! * the three codes — the five-qubit code, the Steane code and the
//!   nine-data-qubit surface code with a single reused ancilla — together
//!   with their flag / lookup-table extraction protocols ([`codes`],
//!   [`protocols`]),
//! * a sequential scheduler that applies gate noise to participants and
//!   resting dephasing to every other active qubit ([`schedule`]),
//! * logical-error metrics, closed-form gain models, experiment sweeps and
//!   an independent Pauli-frame Monte-Carlo cross-check ([`metrics`],
//!   [`model`], [`experiments`], [`mc`]).
//!
//! # Qubit ordering
//!
//! Qubit 0 is the *most significant* tensor factor everywhere: basis state
//! index `i` assigns qubit `q` the bit `(i >> (n - 1 - q)) & 1`. All modules
//! inherit this convention.

pub mod channels;
pub mod cli;
pub mod codes;
pub mod config;
pub mod dm;
pub mod experiments;
pub mod frame;
pub mod mc;
pub mod metrics;
pub mod model;
pub mod pauli;
pub mod protocols;
pub mod schedule;
pub mod sparse;

use thiserror::Error;

/// Tolerance for contract checks (trace preservation, completeness).
pub const TOL_CONTRACT: f64 = 1e-10;
/// Tolerance for exact-identity assertions (Hermiticity, normalisation).
pub const TOL_EXACT: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("bit string length {got} does not match qubit count {want}")]
    BadBitString { got: usize, want: usize },
    #[error("duplicate or out-of-range target qubits: {0:?}")]
    BadTargets(Vec<usize>),
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("damping coefficient {0} outside [0, 1]")]
    BadGamma(f64),
    #[error("non-positive coherence time {0}")]
    BadCoherenceTime(f64),
    #[error("operator is not unitary (max deviation {0:.3e})")]
    NonUnitary(f64),
    #[error("Kraus completeness violated (max deviation {0:.3e})")]
    IncompleteChannel(f64),
    #[error("density matrix has zero trace")]
    ZeroTrace,
    #[error("state is not in the codespace (deviation {0:.3e})")]
    NotInCodespace(f64),
    #[error("unknown gate {0:?}")]
    UnknownGate(String),
    #[error("unknown code {0:?}")]
    UnknownCode(String),
    #[error("empty outcome set")]
    EmptyOutcomeSet,
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
