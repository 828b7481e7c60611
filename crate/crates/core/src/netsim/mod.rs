//! Deterministic lockstep round engine.
//!
//! Every round has three phases. In the send phase each correct process
//! produces one broadcast and each faulty process plans a per-link batch
//! with full view of the run so far, including what the correct processes
//! are about to send. In the delivery phase every message reaches its
//! receiver's inbox under the receiver's label for that link. In the compute
//! phase each process consumes its inbox.
//!
//! Processes never learn who is behind a link, only its label. Labels are a
//! seed-derived permutation per process, with label `n` reserved for the
//! self-loop.

mod trace;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ProtocolError, SimError};
use crate::types::{LinkLabel, Msg, ProcId, SystemParams};

pub use trace::{read_jsonl, Delivery, Snapshot, SnapshotEntry, TraceLog};

/// Messages received in one round, keyed by the receiver's link label.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoundInbox {
    pub by_link: BTreeMap<LinkLabel, Msg>,
}

impl RoundInbox {
    pub fn iter(&self) -> impl Iterator<Item = (LinkLabel, &Msg)> {
        self.by_link.iter().map(|(l, m)| (*l, m))
    }

    pub fn get(&self, link: LinkLabel) -> Option<&Msg> {
        self.by_link.get(&link)
    }

    pub fn len(&self) -> usize {
        self.by_link.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_link.is_empty()
    }
}

/// Messages a process sends in one round, keyed by the sender's link label.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OutgoingBatch {
    pub per_link: BTreeMap<LinkLabel, Msg>,
}

impl OutgoingBatch {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The same message on every link, self-loop included.
    pub fn broadcast(msg: &Msg, n: usize) -> Self {
        OutgoingBatch {
            per_link: (1..=n).map(|l| (LinkLabel(l), msg.clone())).collect(),
        }
    }

    pub fn send(&mut self, link: LinkLabel, msg: Msg) {
        self.per_link.insert(link, msg);
    }

    pub fn is_uniform_broadcast(&self, n: usize) -> bool {
        let mut msgs = self.per_link.values();
        match msgs.next() {
            None => true,
            Some(first) => self.per_link.len() == n && msgs.all(|m| m == first),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub rounds_executed: u32,
    pub messages_delivered: u64,
    /// Largest number of ids carried by one message sent by a correct process.
    pub max_message_ids: usize,
}

/// Who sits behind every link label, for every process.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    // label_of[receiver][sender] and peer_of[receiver][label], both 0-based storage.
    label_of: Vec<Vec<usize>>,
    peer_of: Vec<Vec<usize>>,
}

impl Topology {
    /// Per-process random labeling of the `n - 1` peers; label `n` is the self-loop.
    pub fn from_seed(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6c61_6265_6c73);
        let mut label_of = vec![vec![0; n]; n];
        let mut peer_of = vec![vec![0; n + 1]; n];
        for me in 0..n {
            let mut peers: Vec<usize> = (0..n).filter(|&p| p != me).collect();
            peers.shuffle(&mut rng);
            for (pos, &p) in peers.iter().enumerate() {
                label_of[me][p] = pos + 1;
                peer_of[me][pos + 1] = p + 1;
            }
            label_of[me][me] = n;
            peer_of[me][n] = me + 1;
        }
        Topology { n, label_of, peer_of }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Label under which `receiver` sees the link from `sender` (1-based indices).
    pub fn label_at(&self, receiver: usize, sender: usize) -> LinkLabel {
        LinkLabel(self.label_of[receiver - 1][sender - 1])
    }

    /// Process index behind `label` at `receiver`.
    pub fn peer_at(&self, receiver: usize, label: LinkLabel) -> Option<usize> {
        if label.0 == 0 || label.0 > self.n {
            return None;
        }
        Some(self.peer_of[receiver - 1][label.0])
    }
}

/// A correct process's protocol state machine.
pub trait Protocol: Send {
    fn my_id(&self) -> ProcId;

    /// The broadcast for `round`, if any. Called before delivery.
    fn broadcast(&mut self, round: u32) -> Result<Option<Msg>, ProtocolError>;

    fn deliver(&mut self, round: u32, inbox: &RoundInbox) -> Result<(), ProtocolError>;

    fn decision(&self) -> Option<u64>;

    fn snapshot(&self) -> Snapshot;
}

/// Everything a faulty process may look at when planning a round.
pub struct View<'a> {
    pub round: u32,
    pub params: &'a SystemParams,
    pub me: usize,
    pub topology: &'a Topology,
    pub trace: &'a TraceLog,
    /// Current state of every correct process, by index.
    pub correct: &'a BTreeMap<usize, Snapshot>,
    /// What every correct process broadcasts this round.
    pub pending: &'a BTreeMap<usize, Option<Msg>>,
    pub faulty: &'a BTreeSet<usize>,
}

impl View<'_> {
    /// Index of the process behind one of my own links.
    pub fn peer(&self, label: LinkLabel) -> Option<usize> {
        self.topology.peer_at(self.me, label)
    }

    /// My label for the link to `index`.
    pub fn link_to(&self, index: usize) -> LinkLabel {
        self.topology.label_at(self.me, index)
    }

    pub fn correct_ids(&self) -> BTreeSet<ProcId> {
        self.correct.values().map(|s| s.my_id()).collect()
    }
}

/// A faulty process. Planning may not fail.
pub trait Adversary: Send {
    fn plan_round(&mut self, view: &View<'_>) -> OutgoingBatch;

    fn observe(&mut self, _round: u32, _inbox: &RoundInbox) {}
}

pub enum ProcessKind {
    Correct(Box<dyn Protocol>),
    Faulty(Box<dyn Adversary>),
}

pub struct ProcessHandle {
    /// Physical position in `[1, n]`.
    pub index: usize,
    pub kind: ProcessKind,
}

impl ProcessHandle {
    pub fn correct(index: usize, p: impl Protocol + 'static) -> Self {
        ProcessHandle { index, kind: ProcessKind::Correct(Box::new(p)) }
    }

    pub fn faulty(index: usize, a: impl Adversary + 'static) -> Self {
        ProcessHandle { index, kind: ProcessKind::Faulty(Box::new(a)) }
    }

    pub fn is_correct(&self) -> bool {
        matches!(self.kind, ProcessKind::Correct(_))
    }
}

pub struct RunOutput {
    pub names: BTreeMap<ProcId, u64>,
    pub metrics: RunMetrics,
    pub trace: TraceLog,
    pub topology: Topology,
}

/// Routes one round of batches. `batches[i]` belongs to process `i + 1`.
/// Links outside `[1, n]` and faulty self-loops are dropped.
pub fn reliable_link_delivery(
    batches: &[OutgoingBatch],
    topology: &Topology,
    faulty: &BTreeSet<usize>,
) -> (Vec<RoundInbox>, Vec<Delivery>) {
    let n = topology.n();
    let mut inboxes = vec![RoundInbox::default(); n];
    let mut deliveries = Vec::new();
    for (pos, batch) in batches.iter().enumerate() {
        let sender = pos + 1;
        for (&label, msg) in &batch.per_link {
            let Some(receiver) = topology.peer_at(sender, label) else {
                continue;
            };
            if receiver == sender && faulty.contains(&sender) {
                continue;
            }
            let at = topology.label_at(receiver, sender);
            inboxes[receiver - 1].by_link.insert(at, msg.clone());
            deliveries.push(Delivery {
                round: 0,
                from_index: sender,
                to_index: receiver,
                link_label: at,
                msg: msg.clone(),
            });
        }
    }
    deliveries.sort_by_key(|d| (d.from_index, d.to_index));
    (inboxes, deliveries)
}

/// Runs exactly `total_rounds` lockstep rounds and collects every correct
/// process's decision.
pub fn run_protocol(
    params: &SystemParams,
    mut handles: Vec<ProcessHandle>,
    total_rounds: u32,
    seed: u64,
) -> Result<RunOutput, SimError> {
    let n = params.n;
    if handles.len() != n {
        return Err(SimError::HandleCount { expected: n, got: handles.len() });
    }
    handles.sort_by_key(|h| h.index);
    for (pos, h) in handles.iter().enumerate() {
        if h.index != pos + 1 {
            return Err(SimError::HandleIndex { position: pos + 1, index: h.index });
        }
    }
    let faulty: BTreeSet<usize> = handles.iter().filter(|h| !h.is_correct()).map(|h| h.index).collect();
    if faulty.len() > params.t {
        return Err(SimError::TooManyFaulty { faulty: faulty.len(), t: params.t });
    }
    let mut seen: BTreeMap<ProcId, usize> = BTreeMap::new();
    for h in &handles {
        if let ProcessKind::Correct(p) = &h.kind {
            if let Some(prev) = seen.insert(p.my_id(), h.index) {
                return Err(SimError::DuplicateCorrectId(prev, h.index, p.my_id()));
            }
        }
    }

    let topology = Topology::from_seed(n, seed);
    let mut trace = TraceLog::new(
        handles
            .iter()
            .filter_map(|h| match &h.kind {
                ProcessKind::Correct(p) => Some((h.index, p.my_id())),
                ProcessKind::Faulty(_) => None,
            })
            .collect(),
        faulty.clone(),
    );
    let mut metrics = RunMetrics::default();
    let mut states: BTreeMap<usize, Snapshot> = handles
        .iter()
        .filter_map(|h| match &h.kind {
            ProcessKind::Correct(p) => Some((h.index, p.snapshot())),
            ProcessKind::Faulty(_) => None,
        })
        .collect();

    for round in 1..=total_rounds {
        let mut pending: BTreeMap<usize, Option<Msg>> = BTreeMap::new();
        for h in handles.iter_mut() {
            if let ProcessKind::Correct(p) = &mut h.kind {
                let msg = p
                    .broadcast(round)
                    .map_err(|source| SimError::Protocol { index: h.index, round, source })?;
                if let Some(m) = &msg {
                    metrics.max_message_ids = metrics.max_message_ids.max(m.id_count());
                }
                pending.insert(h.index, msg);
            }
        }

        let mut batches = Vec::with_capacity(n);
        for h in handles.iter_mut() {
            let batch = match &mut h.kind {
                ProcessKind::Correct(_) => match &pending[&h.index] {
                    Some(m) => OutgoingBatch::broadcast(m, n),
                    None => OutgoingBatch::empty(),
                },
                ProcessKind::Faulty(adv) => {
                    let view = View {
                        round,
                        params,
                        me: h.index,
                        topology: &topology,
                        trace: &trace,
                        correct: &states,
                        pending: &pending,
                        faulty: &faulty,
                    };
                    adv.plan_round(&view)
                }
            };
            batches.push(batch);
        }

        let (inboxes, deliveries) = reliable_link_delivery(&batches, &topology, &faulty);
        metrics.messages_delivered += deliveries.len() as u64;
        trace.push_round(round, deliveries);

        for (h, inbox) in handles.iter_mut().zip(&inboxes) {
            match &mut h.kind {
                ProcessKind::Correct(p) => {
                    p.deliver(round, inbox)
                        .map_err(|source| SimError::Protocol { index: h.index, round, source })?;
                    let snap = p.snapshot();
                    trace.push_snapshot(round, h.index, snap.clone());
                    states.insert(h.index, snap);
                }
                ProcessKind::Faulty(adv) => adv.observe(round, inbox),
            }
        }
        metrics.rounds_executed = round;
    }

    let mut names = BTreeMap::new();
    for h in &handles {
        if let ProcessKind::Correct(p) = &h.kind {
            let name = p.decision().ok_or(SimError::Undecided(h.index))?;
            names.insert(p.my_id(), name);
        }
    }
    Ok(RunOutput { names, metrics, trace, topology })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topology_is_a_permutation_with_self_loop_last() {
        let topo = Topology::from_seed(6, 42);
        for me in 1..=6 {
            let mut labels: Vec<usize> = (1..=6).map(|s| topo.label_at(me, s).0).collect();
            assert_eq!(topo.label_at(me, me), LinkLabel(6));
            labels.sort();
            assert_eq!(labels, (1..=6).collect::<Vec<_>>());
            for s in 1..=6 {
                assert_eq!(topo.peer_at(me, topo.label_at(me, s)), Some(s));
            }
        }
        assert_eq!(topo, Topology::from_seed(6, 42));
        assert_eq!(topo.peer_at(1, LinkLabel(0)), None);
        assert_eq!(topo.peer_at(1, LinkLabel(7)), None);
    }

    #[test]
    fn broadcast_round_fills_every_label() {
        let n = 4;
        let topo = Topology::from_seed(n, 1);
        let batches: Vec<OutgoingBatch> = (1..=n as u64)
            .map(|i| OutgoingBatch::broadcast(&Msg::Id(ProcId(i * 10)), n))
            .collect();
        let (inboxes, deliveries) = reliable_link_delivery(&batches, &topo, &BTreeSet::new());
        assert_eq!(deliveries.len(), n * n);
        for (r, inbox) in inboxes.iter().enumerate() {
            assert_eq!(inbox.len(), n);
            for (label, msg) in inbox.iter() {
                let sender = topo.peer_at(r + 1, label).unwrap();
                assert_eq!(msg, &Msg::Id(ProcId(sender as u64 * 10)));
            }
        }
    }

    #[test]
    fn selective_send_reaches_only_targets() {
        let n = 4;
        let topo = Topology::from_seed(n, 9);
        let mut batches = vec![OutgoingBatch::empty(); n];
        batches[3].send(LinkLabel(1), Msg::Id(ProcId(99)));
        batches[3].send(LinkLabel(2), Msg::Id(ProcId(98)));
        let faulty = BTreeSet::from([4]);
        let (inboxes, deliveries) = reliable_link_delivery(&batches, &topo, &faulty);
        assert_eq!(deliveries.len(), 2);
        let reached: BTreeSet<usize> = deliveries.iter().map(|d| d.to_index).collect();
        let expected: BTreeSet<usize> =
            [1, 2].iter().map(|&l| topo.peer_at(4, LinkLabel(l)).unwrap()).collect();
        assert_eq!(reached, expected);
        assert_eq!(inboxes.iter().map(|i| i.len()).sum::<usize>(), 2);
    }

    #[test]
    fn empty_batches_give_empty_inboxes() {
        let topo = Topology::from_seed(3, 0);
        let (inboxes, deliveries) =
            reliable_link_delivery(&vec![OutgoingBatch::empty(); 3], &topo, &BTreeSet::new());
        assert!(deliveries.is_empty());
        assert!(inboxes.iter().all(|i| i.is_empty()));
    }

    #[test]
    fn faulty_self_loop_is_dropped() {
        let topo = Topology::from_seed(3, 0);
        let mut batches = vec![OutgoingBatch::empty(); 3];
        batches[0] = OutgoingBatch::broadcast(&Msg::Id(ProcId(1)), 3);
        let (inboxes, deliveries) = reliable_link_delivery(&batches, &topo, &BTreeSet::from([1]));
        assert_eq!(deliveries.len(), 2);
        assert!(inboxes[0].is_empty());
    }

    #[test]
    fn uniform_broadcast_detection() {
        let b = OutgoingBatch::broadcast(&Msg::Id(ProcId(3)), 4);
        assert!(b.is_uniform_broadcast(4));
        let mut c = b.clone();
        c.send(LinkLabel(2), Msg::Id(ProcId(4)));
        assert!(!c.is_uniform_broadcast(4));
        assert!(OutgoingBatch::empty().is_uniform_broadcast(4));
    }
}
