//! Two-step order-preserving renaming for `N > 2t^2 + t`, namespace `N^2`.
//!
//! Step 1 announces ids and remembers which id arrived on which link. Step 2
//! echoes the whole timely set. Each id's offset is its echo count clamped to
//! `N - t`, and a name is the running sum of offsets up to the own id.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{ConfigError, ProtocolError};
use crate::netsim::{Protocol, RoundInbox, Snapshot};
use crate::types::{Algorithm, LinkLabel, Msg, ProcId, SystemParams};

pub const ROUNDS: u32 = 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoStepSnapshot {
    pub my_id: ProcId,
    pub round: u32,
    /// Links absent from the map are still ⊥.
    pub linkid: BTreeMap<LinkLabel, ProcId>,
    pub timely: BTreeSet<ProcId>,
    pub accepted: BTreeSet<ProcId>,
    pub counter: BTreeMap<ProcId, usize>,
    pub newid: BTreeMap<ProcId, u64>,
    /// Validity verdict for every MULTIECHO received in step 2.
    pub echo_verdicts: BTreeMap<LinkLabel, bool>,
    pub decided: Option<u64>,
}

pub struct TwoStepState {
    my_id: ProcId,
    params: SystemParams,
    linkid: BTreeMap<LinkLabel, ProcId>,
    timely: BTreeSet<ProcId>,
    accepted: BTreeSet<ProcId>,
    counter: BTreeMap<ProcId, usize>,
    newid: BTreeMap<ProcId, u64>,
    echo_verdicts: BTreeMap<LinkLabel, bool>,
    round: u32,
    decided: Option<u64>,
}

impl TwoStepState {
    pub fn new(my_id: ProcId, params: SystemParams) -> Result<Self, ConfigError> {
        params.validate_for(Algorithm::TwoStep)?;
        Ok(TwoStepState {
            my_id,
            params,
            linkid: BTreeMap::new(),
            timely: BTreeSet::new(),
            accepted: BTreeSet::new(),
            counter: BTreeMap::new(),
            newid: BTreeMap::new(),
            echo_verdicts: BTreeMap::new(),
            round: 0,
            decided: None,
        })
    }

    /// A MULTIECHO on `lnk` counts only if that link announced an id, it
    /// carries at most `N` ids and shares at least `N - t` with our timely set.
    pub fn is_valid(&self, lnk: LinkLabel, ids: &BTreeSet<ProcId>) -> bool {
        self.linkid.contains_key(&lnk)
            && ids.len() <= self.params.n
            && self.timely.intersection(ids).count() >= self.params.quorum()
    }

    fn record_ids(&mut self, inbox: &RoundInbox) {
        for (lnk, msg) in inbox.iter() {
            if let Msg::Id(id) = msg {
                self.linkid.insert(lnk, *id);
                self.timely.insert(*id);
            }
        }
    }

    fn count_echoes(&mut self, inbox: &RoundInbox) -> Result<u64, ProtocolError> {
        for (lnk, msg) in inbox.iter() {
            let Msg::MultiEcho(ids) = msg else {
                continue;
            };
            let ok = self.is_valid(lnk, ids);
            self.echo_verdicts.insert(lnk, ok);
            if ok {
                for id in ids {
                    self.accepted.insert(*id);
                    *self.counter.entry(*id).or_insert(0) += 1;
                }
            }
        }
        let cap = self.params.quorum();
        let mut accum = 0u64;
        for id in &self.accepted {
            accum += self.counter[id].min(cap) as u64;
            self.newid.insert(*id, accum);
        }
        self.newid
            .get(&self.my_id)
            .copied()
            .ok_or(ProtocolError::OwnIdNotAccepted(self.my_id))
    }
}

impl Protocol for TwoStepState {
    fn my_id(&self) -> ProcId {
        self.my_id
    }

    fn broadcast(&mut self, round: u32) -> Result<Option<Msg>, ProtocolError> {
        match round {
            1 => Ok(Some(Msg::Id(self.my_id))),
            2 => Ok(Some(Msg::MultiEcho(self.timely.clone()))),
            r => Err(ProtocolError::UnexpectedRound(r)),
        }
    }

    fn deliver(&mut self, round: u32, inbox: &RoundInbox) -> Result<(), ProtocolError> {
        self.round = round;
        match round {
            1 => {
                self.record_ids(inbox);
                Ok(())
            }
            2 => {
                self.decided = Some(self.count_echoes(inbox)?);
                Ok(())
            }
            r => Err(ProtocolError::UnexpectedRound(r)),
        }
    }

    fn decision(&self) -> Option<u64> {
        self.decided
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot::TwoStep(TwoStepSnapshot {
            my_id: self.my_id,
            round: self.round,
            linkid: self.linkid.clone(),
            timely: self.timely.clone(),
            accepted: self.accepted.clone(),
            counter: self.counter.clone(),
            newid: self.newid.clone(),
            echo_verdicts: self.echo_verdicts.clone(),
            decided: self.decided,
        })
    }
}
