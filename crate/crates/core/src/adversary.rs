//! Seeded Byzantine strategies.
//!
//! Every strategy sees the whole run: the trace so far, the current state of
//! each correct process and what each correct process is about to broadcast.
//! A strategy's output for a round is a pure function of that view, its
//! parameters and its own seeded generator.

use std::collections::BTreeSet;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::netsim::{Adversary, OutgoingBatch, Protocol, RoundInbox, Snapshot, View};
use crate::opbr::{OpbrState, Variant, ID_SELECTION_ROUNDS};
use crate::rank::{delta, Rank};
use crate::twostep::TwoStepState;
use crate::types::{Algorithm, LinkLabel, Msg, ProcId, RanksMap, SystemParams};

fn default_epsilon() -> Rank {
    Rank::new(5, 2).expect("constant")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", content = "params", rename_all = "kebab-case")]
pub enum Strategy {
    /// Correct until `from_round`, silent from then on.
    Crash { from_round: u32 },
    Silent,
    /// Announces a different pool id on each link and echoes inconsistently.
    EquivocateIds {
        #[serde(default)]
        pool: Vec<ProcId>,
    },
    /// All faulty processes spread `fakes` so that each reaches enough
    /// correct processes to be accepted everywhere.
    ColludeInject {
        #[serde(default)]
        fakes: Vec<ProcId>,
    },
    /// Correct during id selection, then valid votes shifted by `±epsilon`.
    SkewVotes {
        #[serde(default = "default_epsilon")]
        epsilon: Rank,
        #[serde(default)]
        targets: Vec<ProcId>,
    },
    /// Id sets and vote maps with `N + 1` entries.
    OversizeEcho,
    RandomByz {
        #[serde(default)]
        seed: u64,
    },
}

impl Strategy {
    pub const NAMES: [&'static str; 7] = [
        "crash",
        "silent",
        "equivocate-ids",
        "collude-inject",
        "skew-votes",
        "oversize-echo",
        "random-byz",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Crash { .. } => "crash",
            Strategy::Silent => "silent",
            Strategy::EquivocateIds { .. } => "equivocate-ids",
            Strategy::ColludeInject { .. } => "collude-inject",
            Strategy::SkewVotes { .. } => "skew-votes",
            Strategy::OversizeEcho => "oversize-echo",
            Strategy::RandomByz { .. } => "random-byz",
        }
    }

    /// Default-parameterized strategy for sweeps. `seed` varies the crash round.
    pub fn by_name(name: &str, seed: u64, total_rounds: u32) -> Result<Strategy, ConfigError> {
        Ok(match name {
            "crash" => Strategy::Crash { from_round: 1 + (seed % total_rounds.max(1) as u64) as u32 },
            "silent" => Strategy::Silent,
            "equivocate-ids" => Strategy::EquivocateIds { pool: Vec::new() },
            "collude-inject" => Strategy::ColludeInject { fakes: Vec::new() },
            "skew-votes" => Strategy::SkewVotes { epsilon: default_epsilon(), targets: Vec::new() },
            "oversize-echo" => Strategy::OversizeEcho,
            "random-byz" => Strategy::RandomByz { seed },
            other => return Err(ConfigError::UnknownStrategy(other.to_string())),
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            Strategy::Crash { from_round: 0 } => {
                Err(ConfigError::StrategyParams("crash from_round must be at least 1".into()))
            }
            Strategy::SkewVotes { epsilon, .. } if epsilon.is_negative() => {
                Err(ConfigError::StrategyParams("skew-votes epsilon must be non-negative".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Interleaving ids used when a strategy is given no explicit pool: one
/// below every default correct id and one past the last.
fn default_pool(n: usize, offset: u64) -> Vec<ProcId> {
    (0..=n as u64).map(|i| ProcId(10 * i + offset)).collect()
}

pub struct Byzantine {
    strategy: Strategy,
    algorithm: Algorithm,
    params: SystemParams,
    nominal_id: ProcId,
    rng: ChaCha8Rng,
    shadow: Option<Box<dyn Protocol>>,
    shadow_sent: Option<Msg>,
}

impl Byzantine {
    /// `nominal_id` is the id the process uses whenever it behaves correctly.
    pub fn new(
        strategy: Strategy,
        algorithm: Algorithm,
        params: SystemParams,
        nominal_id: ProcId,
        run_seed: u64,
        index: usize,
    ) -> Result<Self, ConfigError> {
        strategy.validate()?;
        let extra = match &strategy {
            Strategy::RandomByz { seed } => *seed,
            _ => 0,
        };
        let seed = run_seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(index as u64)
            .wrapping_add(extra.rotate_left(32));
        let shadow: Option<Box<dyn Protocol>> = match &strategy {
            Strategy::Crash { .. } | Strategy::SkewVotes { .. } => Some(match algorithm {
                Algorithm::TwoStep => Box::new(TwoStepState::new(nominal_id, params)?),
                a => Box::new(OpbrState::new(
                    nominal_id,
                    params,
                    Variant::of(a).expect("opbr algorithm"),
                )?),
            }),
            _ => None,
        };
        Ok(Byzantine {
            strategy,
            algorithm,
            params,
            nominal_id,
            rng: ChaCha8Rng::seed_from_u64(seed),
            shadow,
            shadow_sent: None,
        })
    }

    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }

    fn peer_links(&self) -> impl Iterator<Item = LinkLabel> {
        (1..self.params.n).map(LinkLabel)
    }

    /// (my label, receiver snapshot) for every correct receiver, by label.
    fn correct_links<'v>(&self, view: &'v View<'_>) -> Vec<(LinkLabel, usize, &'v Snapshot)> {
        let mut out: Vec<_> = view
            .correct
            .iter()
            .map(|(&idx, snap)| (view.link_to(idx), idx, snap))
            .collect();
        out.sort_by_key(|(l, _, _)| *l);
        out
    }

    fn behave_correctly(&mut self, round: u32) -> OutgoingBatch {
        let Some(shadow) = self.shadow.as_mut() else {
            return OutgoingBatch::empty();
        };
        match shadow.broadcast(round) {
            Ok(Some(msg)) => {
                self.shadow_sent = Some(msg.clone());
                let mut batch = OutgoingBatch::empty();
                for l in 1..self.params.n {
                    batch.send(LinkLabel(l), msg.clone());
                }
                batch
            }
            _ => {
                self.shadow = None;
                OutgoingBatch::empty()
            }
        }
    }

    fn is_opbr(&self) -> bool {
        self.algorithm != Algorithm::TwoStep
    }

    fn set_kind(&self, round: u32, ids: BTreeSet<ProcId>) -> Msg {
        match (self.algorithm, round) {
            (Algorithm::TwoStep, _) => Msg::MultiEcho(ids),
            (_, 2) => Msg::Echo(ids),
            _ => Msg::Ready(ids),
        }
    }

    fn pending_ranks(view: &View<'_>, index: usize) -> Option<RanksMap> {
        match view.pending.get(&index) {
            Some(Some(Msg::Aa(r))) => Some(r.clone()),
            _ => match view.correct.get(&index) {
                Some(Snapshot::Opbr(s)) => Some(s.ranks.clone()),
                _ => None,
            },
        }
    }

    fn receiver_timely(snap: &Snapshot) -> &BTreeSet<ProcId> {
        match snap {
            Snapshot::Opbr(s) => &s.timely,
            Snapshot::TwoStep(s) => &s.timely,
        }
    }

    fn equivocate(&mut self, view: &View<'_>, pool: &[ProcId]) -> OutgoingBatch {
        let pool: Vec<ProcId> = if pool.is_empty() { default_pool(self.params.n, 5) } else { pool.to_vec() };
        let mut batch = OutgoingBatch::empty();
        let round = view.round;
        if round == 1 {
            let start = self.rng.gen_range(0..pool.len());
            for (k, l) in self.peer_links().enumerate() {
                batch.send(l, Msg::Id(pool[(start + k) % pool.len()]));
            }
            return batch;
        }
        if self.is_opbr() && round > ID_SELECTION_ROUNDS {
            let senders: Vec<usize> = view.correct.keys().copied().collect();
            for (l, _, _) in self.correct_links(view) {
                if let Some(&src) = senders.choose(&mut self.rng) {
                    if let Some(r) = Self::pending_ranks(view, src) {
                        batch.send(l, Msg::Aa(r));
                    }
                }
            }
            return batch;
        }
        let mut candidates: BTreeSet<ProcId> = pool.iter().copied().collect();
        candidates.extend(view.correct_ids());
        for snap in view.correct.values() {
            match snap {
                Snapshot::Opbr(s) => candidates.extend(s.ids.iter().copied()),
                Snapshot::TwoStep(s) => candidates.extend(s.timely.iter().copied()),
            }
        }
        let links: Vec<_> = self.correct_links(view);
        for (l, _, snap) in links {
            let ids: BTreeSet<ProcId> = if self.algorithm == Algorithm::TwoStep {
                // mostly the receiver's own view, with a few ids swapped
                let mut base: Vec<ProcId> = Self::receiver_timely(snap).iter().copied().collect();
                base.shuffle(&mut self.rng);
                let drop = self.rng.gen_range(0..=self.params.t);
                let mut set: BTreeSet<ProcId> = base.into_iter().skip(drop).collect();
                let add = self.rng.gen_range(0..=self.params.t);
                set.extend(pool.iter().copied().choose_multiple(&mut self.rng, add));
                set
            } else {
                candidates.iter().copied().filter(|_| self.rng.gen_bool(0.5)).collect()
            };
            batch.send(l, self.set_kind(round, ids));
        }
        batch
    }

    fn collude(&mut self, view: &View<'_>, fakes: &[ProcId]) -> OutgoingBatch {
        let fakes: Vec<ProcId> = if fakes.is_empty() { default_pool(self.params.n, 3) } else { fakes.to_vec() };
        let mut batch = OutgoingBatch::empty();
        let round = view.round;
        let correct: Vec<usize> = view.correct.keys().copied().collect();
        if round == 1 {
            // Deal fakes to correct receivers in blocks of n - t - F, so that
            // each fake collects n - t echoes once every faulty echoes it.
            let f_count = view.faulty.len();
            let f_pos = view.faulty.iter().position(|&i| i == view.me).unwrap_or(0);
            let block = (self.params.n - self.params.t).saturating_sub(f_count).max(1);
            for (c_pos, &idx) in correct.iter().enumerate() {
                let slot = f_pos * correct.len() + c_pos;
                let id = fakes.get(slot / block).copied().unwrap_or(self.nominal_id);
                batch.send(view.link_to(idx), Msg::Id(id));
            }
            for &idx in view.faulty.iter().filter(|&&i| i != view.me) {
                batch.send(view.link_to(idx), Msg::Id(self.nominal_id));
            }
            return batch;
        }
        let mut support: BTreeSet<ProcId> = fakes.iter().copied().collect();
        support.extend(view.correct_ids());
        if self.is_opbr() {
            let links = self.correct_links(view);
            for (l, idx, _) in links {
                let msg = if round > ID_SELECTION_ROUNDS {
                    match Self::pending_ranks(view, idx) {
                        Some(r) => Msg::Aa(r),
                        None => continue,
                    }
                } else {
                    self.set_kind(round, support.clone())
                };
                batch.send(l, msg);
            }
            return batch;
        }
        // twostep: n - t ids the receiver knows, fakes first, then up to t more fakes
        let fake_set: BTreeSet<ProcId> = fakes.iter().copied().collect();
        for (l, _, snap) in self.correct_links(view) {
            let timely = Self::receiver_timely(snap);
            let known: Vec<ProcId> = timely
                .iter()
                .filter(|id| fake_set.contains(id))
                .chain(timely.iter().filter(|id| !fake_set.contains(id)))
                .copied()
                .take(self.params.quorum())
                .collect();
            let mut ids: BTreeSet<ProcId> = known.into_iter().collect();
            for f in &fakes {
                if ids.len() >= self.params.n {
                    break;
                }
                ids.insert(*f);
            }
            batch.send(l, Msg::MultiEcho(ids));
        }
        batch
    }

    fn skew(&mut self, view: &View<'_>, epsilon: &Rank, targets: &[ProcId]) -> OutgoingBatch {
        let d = delta(&self.params);
        let mut batch = OutgoingBatch::empty();
        for (pos, (l, idx, _)) in self.correct_links(view).into_iter().enumerate() {
            let Some(base) = Self::pending_ranks(view, idx) else { continue };
            let up = pos % 2 == 0;
            batch.send(l, Msg::Aa(shifted_votes(&base, targets, epsilon, up, &d)));
        }
        batch
    }

    fn oversize(&mut self, view: &View<'_>) -> OutgoingBatch {
        let round = view.round;
        if round == 1 {
            let mut batch = OutgoingBatch::empty();
            for l in self.peer_links() {
                batch.send(l, Msg::Id(self.nominal_id));
            }
            return batch;
        }
        let target = self.params.n + 1;
        let mut batch = OutgoingBatch::empty();
        for (l, idx, snap) in self.correct_links(view) {
            let mut ids = Self::receiver_timely(snap).clone();
            ids.extend(view.correct_ids());
            let mut filler = self.params.n_max + 1;
            let mut ids: BTreeSet<ProcId> = ids.into_iter().take(target).collect();
            while ids.len() < target {
                ids.insert(ProcId(filler));
                filler += 1;
            }
            let msg = if self.is_opbr() && round > ID_SELECTION_ROUNDS {
                let Some(mut r) = Self::pending_ranks(view, idx) else { continue };
                let mut top = r.iter().map(|(_, v)| v.clone()).max().unwrap_or_else(Rank::zero);
                let d = delta(&self.params);
                let mut extra = self.params.n_max + 1;
                while r.len() < target {
                    top = &top + &d;
                    if !r.contains(&ProcId(extra)) {
                        r.insert(ProcId(extra), top.clone());
                    }
                    extra += 1;
                }
                Msg::Aa(r)
            } else {
                self.set_kind(round, ids)
            };
            batch.send(l, msg);
        }
        batch
    }

    fn random_rank(&mut self) -> Rank {
        let num = self.rng.gen_range(-200i64..=200);
        let den = self.rng.gen_range(1i64..=16);
        Rank::new(num, den).expect("non-zero denominator")
    }

    fn random_byz(&mut self, view: &View<'_>) -> OutgoingBatch {
        let round = view.round;
        let mut candidates: Vec<ProcId> = view.correct_ids().into_iter().collect();
        for _ in 0..self.params.n {
            candidates.push(ProcId(self.rng.gen_range(1..=self.params.n_max)));
        }
        candidates.sort();
        candidates.dedup();
        let d = delta(&self.params);
        let mut batch = OutgoingBatch::empty();
        for l in self.peer_links().collect::<Vec<_>>() {
            if self.rng.gen_bool(0.2) {
                continue;
            }
            let expected = match (self.algorithm, round) {
                (_, 1) => 0,
                (Algorithm::TwoStep, _) => 3,
                (_, 2..=4) => 1,
                _ => 2,
            };
            let kind = if self.rng.gen_bool(0.75) { expected } else { self.rng.gen_range(0..4) };
            let msg = match kind {
                0 => Msg::Id(*candidates.choose(&mut self.rng).expect("non-empty")),
                1 | 3 => {
                    let size = self.rng.gen_range(0..=(self.params.n + 2).min(candidates.len()));
                    let ids: BTreeSet<ProcId> =
                        candidates.choose_multiple(&mut self.rng, size).copied().collect();
                    if kind == 3 {
                        Msg::MultiEcho(ids)
                    } else if self.rng.gen_bool(0.5) {
                        Msg::Echo(ids)
                    } else {
                        Msg::Ready(ids)
                    }
                }
                _ => {
                    let receiver = view.peer(l).unwrap_or(view.me);
                    match Self::pending_ranks(view, receiver) {
                        Some(base) if self.rng.gen_bool(0.5) => {
                            // monotone distortion of a plausible map
                            let shift = self.random_rank();
                            let mut acc = Rank::zero();
                            let mut out = RanksMap::new();
                            for (id, v) in base.iter() {
                                if self.rng.gen_bool(0.1) {
                                    continue;
                                }
                                if self.rng.gen_bool(0.3) {
                                    acc = &acc + &d.mul_int(self.rng.gen_range(0..3));
                                }
                                out.insert(*id, &(v + &shift) + &acc);
                            }
                            Msg::Aa(out)
                        }
                        _ => {
                            let size = self.rng.gen_range(0..=self.params.n + 2);
                            let mut out = RanksMap::new();
                            for _ in 0..size {
                                let id = *candidates.choose(&mut self.rng).expect("non-empty");
                                let r = self.random_rank();
                                out.insert(id, r);
                            }
                            Msg::Aa(out)
                        }
                    }
                }
            };
            batch.send(l, msg);
        }
        batch
    }
}

/// Shifts `targets` (all ids when empty) by `+epsilon` or `-epsilon` and
/// pushes neighbours outward so consecutive entries stay `d` apart.
pub fn shifted_votes(base: &RanksMap, targets: &[ProcId], epsilon: &Rank, up: bool, d: &Rank) -> RanksMap {
    let hit = |id: &ProcId| targets.is_empty() || targets.contains(id);
    let entries: Vec<(ProcId, Rank)> = base.iter().map(|(k, v)| (*k, v.clone())).collect();
    let mut out = RanksMap::new();
    if up {
        let mut prev: Option<Rank> = None;
        for (id, v) in entries {
            let mut nv = if hit(&id) { &v + epsilon } else { v };
            if let Some(p) = &prev {
                let floor = p + d;
                if nv < floor {
                    nv = floor;
                }
            }
            prev = Some(nv.clone());
            out.insert(id, nv);
        }
    } else {
        let mut next: Option<Rank> = None;
        for (id, v) in entries.into_iter().rev() {
            let mut nv = if hit(&id) { &v - epsilon } else { v };
            if let Some(nx) = &next {
                let ceil = nx - d;
                if nv > ceil {
                    nv = ceil;
                }
            }
            next = Some(nv.clone());
            out.insert(id, nv);
        }
    }
    out
}

impl Adversary for Byzantine {
    fn plan_round(&mut self, view: &View<'_>) -> OutgoingBatch {
        let round = view.round;
        let strategy = self.strategy.clone();
        match &strategy {
            Strategy::Crash { from_round } => {
                if round < *from_round {
                    self.behave_correctly(round)
                } else {
                    self.shadow = None;
                    OutgoingBatch::empty()
                }
            }
            Strategy::Silent => OutgoingBatch::empty(),
            Strategy::EquivocateIds { pool } => self.equivocate(view, pool),
            Strategy::ColludeInject { fakes } => self.collude(view, fakes),
            Strategy::SkewVotes { epsilon, targets } => {
                if self.is_opbr() && round > ID_SELECTION_ROUNDS {
                    self.skew(view, epsilon, targets)
                } else {
                    self.behave_correctly(round)
                }
            }
            Strategy::OversizeEcho => self.oversize(view),
            Strategy::RandomByz { .. } => self.random_byz(view),
        }
    }

    fn observe(&mut self, round: u32, inbox: &RoundInbox) {
        let own = self.shadow_sent.take();
        if let Some(shadow) = self.shadow.as_mut() {
            let mut inbox = inbox.clone();
            if let Some(m) = own {
                inbox.by_link.insert(self.params.self_loop(), m);
            }
            if shadow.deliver(round, &inbox).is_err() {
                self.shadow = None;
            }
        }
    }
}
