use std::path::PathBuf;

use thiserror::Error;

use crate::types::{Algorithm, ProcId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RankError {
    #[error("rational with zero denominator")]
    ZeroDenominator,
    #[error("id {0} is not in the set")]
    AbsentElement(ProcId),
}

/// A configuration that violates one of the system constraints.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("a system needs at least one process")]
    EmptySystem,
    #[error("n_max = {n_max} is smaller than n = {n}")]
    NamespaceTooSmall { n: usize, n_max: u64 },
    #[error("{algorithm} requires {requirement} (got N = {n}, t = {t})")]
    Resilience {
        algorithm: Algorithm,
        requirement: &'static str,
        n: usize,
        t: usize,
    },
    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("{faulty} faulty processes exceed the fault bound t = {t}")]
    TooManyFaulty { faulty: usize, t: usize },
    #[error("faulty index {index} is outside [1, {n}]")]
    FaultyIndexOutOfRange { index: usize, n: usize },
    #[error("faulty index {0} is listed twice")]
    DuplicateFaultyIndex(usize),
    #[error("expected {expected} correct ids, got {got}")]
    CorrectIdCount { expected: usize, got: usize },
    #[error("correct id {0} is listed twice")]
    DuplicateCorrectId(ProcId),
    #[error("correct id {id} is outside [1, {n_max}]")]
    CorrectIdOutOfRange { id: ProcId, n_max: u64 },
    #[error("invalid strategy parameters: {0}")]
    StrategyParams(String),
    #[error("malformed config: {0}")]
    Malformed(String),
}

/// Raised by a correct state machine. Under at most `t` faults this never
/// happens, so it always points at an implementation bug.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("own id {0} missing from the accepted set")]
    OwnIdNotAccepted(ProcId),
    #[error("own id {0} dropped during approximation")]
    OwnIdDropped(ProcId),
    #[error("decided rank {0} does not round to a positive name")]
    NameOutOfRange(String),
    #[error("no step {0} in this protocol")]
    UnexpectedRound(u32),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("expected {expected} process handles, got {got}")]
    HandleCount { expected: usize, got: usize },
    #[error("handle at position {position} has index {index}")]
    HandleIndex { position: usize, index: usize },
    #[error("{faulty} faulty handles exceed t = {t}")]
    TooManyFaulty { faulty: usize, t: usize },
    #[error("correct process {index} failed in round {round}: {source}")]
    Protocol {
        index: usize,
        round: u32,
        #[source]
        source: ProtocolError,
    },
    #[error("correct process {0} finished without deciding")]
    Undecided(usize),
    #[error("correct processes {0} and {1} share id {2}")]
    DuplicateCorrectId(usize, usize, ProcId),
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("unknown message kind {0:?}")]
    UnknownKind(String),
    #[error("malformed {0} payload: {1}")]
    Payload(String, String),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("trace has no header line")]
    MissingHeader,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckerError {
    #[error("no snapshot for process {index} at round {round}")]
    MissingSnapshot { index: usize, round: u32 },
    #[error("trace holds {found} snapshots, expected kind {expected}")]
    WrongSnapshotKind { expected: &'static str, found: &'static str },
    #[error("trace has no correct processes")]
    NoCorrectProcesses,
}

/// Top-level error for runs, sweeps and trace replays.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Checker(#[from] CheckerError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("replayed trace diverges: {0}")]
    Replay(String),
}

impl RunError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunError::Io { path: path.into(), source }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        RunError::Json { path: path.into(), source }
    }
}
