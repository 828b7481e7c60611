//! Identifiers, system parameters and the wire messages shared by every protocol.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{ConfigError, TraceError};
use crate::rank::Rank;

/// Original identifier of a process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcId(pub u64);

impl fmt::Display for ProcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Receiver-side label of a link, in `[1, n]`. Label `n` is the self-loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkLabel(pub usize);

impl fmt::Display for LinkLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Which of the three renaming algorithms a run executes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "opbr-log")]
    OpbrLog,
    #[serde(rename = "opbr-const")]
    OpbrConst,
    #[serde(rename = "twostep")]
    TwoStep,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::OpbrLog, Algorithm::OpbrConst, Algorithm::TwoStep];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::OpbrLog => "opbr-log",
            Algorithm::OpbrConst => "opbr-const",
            Algorithm::TwoStep => "twostep",
        }
    }

    /// Resilience condition on `(n, t)` for this algorithm.
    pub fn admits(self, n: usize, t: usize) -> bool {
        match self {
            Algorithm::OpbrLog => n > 3 * t,
            Algorithm::OpbrConst => n > t * t + 2 * t,
            Algorithm::TwoStep => n > 2 * t * t + t,
        }
    }

    pub fn requirement(self) -> &'static str {
        match self {
            Algorithm::OpbrLog => "N > 3t",
            Algorithm::OpbrConst => "N > t²+2t",
            Algorithm::TwoStep => "N > 2t²+t",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| ConfigError::UnknownAlgorithm(s.to_string()))
    }
}

/// Process count `n`, fault bound `t` and original-namespace bound `n_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n: usize,
    pub t: usize,
    pub n_max: u64,
}

impl SystemParams {
    pub fn new(n: usize, t: usize, n_max: u64) -> Result<Self, ConfigError> {
        if n == 0 {
            return Err(ConfigError::EmptySystem);
        }
        if n_max < n as u64 {
            return Err(ConfigError::NamespaceTooSmall { n, n_max });
        }
        Ok(SystemParams { n, t, n_max })
    }

    /// Builds parameters and checks the resilience condition for `algorithm`.
    pub fn for_algorithm(n: usize, t: usize, n_max: u64, algorithm: Algorithm) -> Result<Self, ConfigError> {
        let params = Self::new(n, t, n_max)?;
        params.validate_for(algorithm)?;
        Ok(params)
    }

    pub fn validate_for(&self, algorithm: Algorithm) -> Result<(), ConfigError> {
        if algorithm.admits(self.n, self.t) {
            Ok(())
        } else {
            Err(ConfigError::Resilience {
                algorithm,
                requirement: algorithm.requirement(),
                n: self.n,
                t: self.t,
            })
        }
    }

    /// `n - t`, the "enough distinct links" threshold.
    pub fn quorum(&self) -> usize {
        self.n - self.t
    }

    /// `n - 2t`, the amplification threshold.
    pub fn weak_quorum(&self) -> usize {
        self.n.saturating_sub(2 * self.t)
    }

    pub fn self_loop(&self) -> LinkLabel {
        LinkLabel(self.n)
    }
}

/// Sparse map from original id to rank; iterates in increasing id order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RanksMap(pub BTreeMap<ProcId, Rank>);

impl RanksMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: &ProcId) -> Option<&Rank> {
        self.0.get(id)
    }

    pub fn insert(&mut self, id: ProcId, r: Rank) {
        self.0.insert(id, r);
    }

    pub fn contains(&self, id: &ProcId) -> bool {
        self.0.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &ProcId> {
        self.0.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ProcId, &Rank)> {
        self.0.iter()
    }
}

impl FromIterator<(ProcId, Rank)> for RanksMap {
    fn from_iter<I: IntoIterator<Item = (ProcId, Rank)>>(iter: I) -> Self {
        RanksMap(iter.into_iter().collect())
    }
}

/// The five wire messages. ECHO and READY carry a whole id set so that a
/// step stays a single broadcast.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Msg {
    Id(ProcId),
    Echo(BTreeSet<ProcId>),
    Ready(BTreeSet<ProcId>),
    Aa(RanksMap),
    MultiEcho(BTreeSet<ProcId>),
}

impl Msg {
    pub fn kind(&self) -> &'static str {
        match self {
            Msg::Id(_) => "ID",
            Msg::Echo(_) => "ECHO",
            Msg::Ready(_) => "READY",
            Msg::Aa(_) => "AA",
            Msg::MultiEcho(_) => "MULTIECHO",
        }
    }

    /// Number of original ids carried by the message.
    pub fn id_count(&self) -> usize {
        match self {
            Msg::Id(_) => 1,
            Msg::Echo(s) | Msg::Ready(s) | Msg::MultiEcho(s) => s.len(),
            Msg::Aa(m) => m.len(),
        }
    }

    pub fn payload(&self) -> Value {
        match self {
            Msg::Id(id) => json!(id.0),
            Msg::Echo(s) | Msg::Ready(s) | Msg::MultiEcho(s) => {
                Value::Array(s.iter().map(|id| json!(id.0)).collect())
            }
            Msg::Aa(m) => serde_json::to_value(m).expect("ranks map serializes"),
        }
    }

    /// Inverse of [`Msg::kind`] + [`Msg::payload`]. Sets tolerate duplicate
    /// entries on input and collapse them.
    pub fn from_parts(kind: &str, payload: &Value) -> Result<Msg, TraceError> {
        let bad = || TraceError::Payload(kind.to_string(), payload.to_string());
        let id_set = |v: &Value| -> Result<BTreeSet<ProcId>, TraceError> {
            v.as_array()
                .ok_or_else(bad)?
                .iter()
                .map(|x| x.as_u64().map(ProcId).ok_or_else(bad))
                .collect()
        };
        match kind {
            "ID" => payload.as_u64().map(|v| Msg::Id(ProcId(v))).ok_or_else(bad),
            "ECHO" => Ok(Msg::Echo(id_set(payload)?)),
            "READY" => Ok(Msg::Ready(id_set(payload)?)),
            "MULTIECHO" => Ok(Msg::MultiEcho(id_set(payload)?)),
            "AA" => serde_json::from_value(payload.clone())
                .map(Msg::Aa)
                .map_err(|_| bad()),
            other => Err(TraceError::UnknownKind(other.to_string())),
        }
    }
}
