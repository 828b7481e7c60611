//! Deterministic lockstep simulator and Byzantine order-preserving renaming.
//!
//! [`netsim`] drives synchronous rounds over per-process link labels,
//! [`opbr`] and [`twostep`] are the renaming protocols, [`adversary`] holds
//! the fault catalog and [`checker`] evaluates invariants over a trace.
//! [`runner`] ties them together behind JSON configs and reports.

pub mod adversary;
pub mod checker;
pub mod error;
pub mod netsim;
pub mod opbr;
pub mod rank;
pub mod runner;
pub mod twostep;
pub mod types;

pub use error::{CheckerError, ConfigError, ProtocolError, RankError, RunError, SimError, TraceError};
pub use rank::Rank;
pub use types::{Algorithm, LinkLabel, Msg, ProcId, RanksMap, SystemParams};
