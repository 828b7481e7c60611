//! Order-preserving Byzantine renaming for `N > 3t`.
//!
//! Steps 1 to 4 select ids: announce (ID), echo (ECHO), then two rounds of
//! READY with amplification at the `N - 2t` threshold. After step 4 every
//! accepted id gets the initial rank `position * delta`. The remaining
//! steps run one validated approximate-agreement instance per accepted id
//! and decide by rounding the final rank of the process's own id.
//!
//! The logarithmic variant runs `3 * ceil(log2 t) + 3` approximation steps.
//! The constant variant runs 4 and needs `N > t^2 + 2t`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ProtocolError};
use crate::netsim::{Protocol, RoundInbox, Snapshot};
use crate::rank::{delta, rank_in, Multiset, Rank};
use crate::types::{Algorithm, LinkLabel, Msg, ProcId, RanksMap, SystemParams};

/// Round budget of the approximation phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Log,
    Const,
}

impl Variant {
    pub fn algorithm(self) -> Algorithm {
        match self {
            Variant::Log => Algorithm::OpbrLog,
            Variant::Const => Algorithm::OpbrConst,
        }
    }

    pub fn of(algorithm: Algorithm) -> Option<Variant> {
        match algorithm {
            Algorithm::OpbrLog => Some(Variant::Log),
            Algorithm::OpbrConst => Some(Variant::Const),
            Algorithm::TwoStep => None,
        }
    }
}

pub const ID_SELECTION_ROUNDS: u32 = 4;

fn ceil_log2(t: usize) -> u32 {
    if t <= 1 {
        0
    } else {
        usize::BITS - (t - 1).leading_zeros()
    }
}

/// Number of approximation steps for `variant`. Total rounds are 4 more.
pub fn round_budget(params: &SystemParams, variant: Variant) -> Result<u32, ConfigError> {
    params.validate_for(variant.algorithm())?;
    Ok(match variant {
        Variant::Log => 3 * ceil_log2(params.t) + 3,
        Variant::Const => 4,
    })
}

pub fn total_rounds(params: &SystemParams, variant: Variant) -> Result<u32, ConfigError> {
    Ok(ID_SELECTION_ROUNDS + round_budget(params, variant)?)
}

/// Vote validity: every timely id has an entry and consecutive timely ids
/// (in id order) are at least `d` apart.
pub fn is_valid(timely: &BTreeSet<ProcId>, r: &RanksMap, d: &Rank) -> bool {
    let mut prev: Option<&Rank> = None;
    for id in timely {
        let Some(cur) = r.get(id) else {
            return false;
        };
        if let Some(p) = prev {
            if &(cur - p) < d {
                return false;
            }
        }
        prev = Some(cur);
    }
    true
}

/// The smallest element and every `t`-th one after it: 1-based positions
/// `i*t + 1`. `t = 0` selects everything.
pub fn select_t(sorted: &Multiset, t: usize) -> Multiset {
    let step = t.max(1);
    sorted.iter().step_by(step).cloned().collect()
}

/// How many elements [`select_t`] keeps from an `(n - 2t)`-element multiset.
pub fn c_sel(params: &SystemParams) -> usize {
    let m = params.weak_quorum();
    if m == 0 {
        0
    } else {
        (m - 1) / params.t.max(1) + 1
    }
}

/// The convergence rate `floor((n - 2t)/t) + 1` as stated for the
/// approximate-agreement step; undefined for `t = 0`.
pub fn sigma_t_closed_form(params: &SystemParams) -> Option<usize> {
    (params.t > 0).then(|| params.weak_quorum() / params.t + 1)
}

/// One approximation step. Shrinks `accepted` to ids with at least `n - t`
/// votes, pads each vote multiset with `my_ranks[id]` up to `n`, trims `t`
/// from each end and averages [`select_t`] of the rest.
pub fn approximate(
    my_ranks: &RanksMap,
    valid_votes: &[&RanksMap],
    accepted: &mut BTreeSet<ProcId>,
    params: &SystemParams,
) -> RanksMap {
    let mut votes: BTreeMap<ProcId, Multiset> = BTreeMap::new();
    for id in accepted.iter() {
        votes.insert(
            *id,
            valid_votes.iter().filter_map(|r| r.get(id).cloned()).collect(),
        );
    }
    accepted.retain(|id| votes[id].len() >= params.quorum() && my_ranks.contains(id));

    let mut new_ranks = RanksMap::new();
    for id in accepted.iter() {
        let mut v = votes.remove(id).expect("vote multiset for every accepted id");
        let own = my_ranks.get(id).expect("own rank for every accepted id");
        while v.len() < params.n {
            v.insert(own.clone());
        }
        for _ in 0..params.t {
            v.remove_max();
            v.remove_min();
        }
        let avg = select_t(&v, params.t)
            .mean()
            .expect("n > 2t leaves a non-empty multiset");
        new_ranks.insert(*id, avg);
    }
    new_ranks
}

/// Observable state after a round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpbrSnapshot {
    pub my_id: ProcId,
    pub round: u32,
    pub ids: BTreeSet<ProcId>,
    pub timely: BTreeSet<ProcId>,
    pub accepted: BTreeSet<ProcId>,
    pub ranks: RanksMap,
    pub ready_sent: BTreeSet<ProcId>,
    /// Links whose AA vote failed validation this round.
    pub rejected_votes: Vec<LinkLabel>,
    pub decided: Option<u64>,
}

pub struct OpbrState {
    my_id: ProcId,
    params: SystemParams,
    variant: Variant,
    delta: Rank,
    last_round: u32,
    ids: BTreeSet<ProcId>,
    timely: BTreeSet<ProcId>,
    accepted: BTreeSet<ProcId>,
    ranks: RanksMap,
    ready_sent: BTreeSet<ProcId>,
    ready_links: BTreeMap<ProcId, BTreeSet<LinkLabel>>,
    rejected_votes: Vec<LinkLabel>,
    round: u32,
    decided: Option<u64>,
}

impl OpbrState {
    pub fn new(my_id: ProcId, params: SystemParams, variant: Variant) -> Result<Self, ConfigError> {
        let last_round = total_rounds(&params, variant)?;
        Ok(OpbrState {
            my_id,
            delta: delta(&params),
            params,
            variant,
            last_round,
            ids: BTreeSet::new(),
            timely: BTreeSet::new(),
            accepted: BTreeSet::new(),
            ranks: RanksMap::new(),
            ready_sent: BTreeSet::new(),
            ready_links: BTreeMap::new(),
            rejected_votes: Vec::new(),
            round: 0,
            decided: None,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn last_round(&self) -> u32 {
        self.last_round
    }

    pub fn timely(&self) -> &BTreeSet<ProcId> {
        &self.timely
    }

    pub fn accepted(&self) -> &BTreeSet<ProcId> {
        &self.accepted
    }

    pub fn ranks(&self) -> &RanksMap {
        &self.ranks
    }

    /// Ids carried by at least `threshold` distinct links in `inbox`, for the
    /// given message extractor.
    fn count_links<'a>(
        inbox: &'a RoundInbox,
        pick: impl Fn(&'a Msg) -> Option<&'a BTreeSet<ProcId>>,
    ) -> BTreeMap<ProcId, BTreeSet<LinkLabel>> {
        let mut by_id: BTreeMap<ProcId, BTreeSet<LinkLabel>> = BTreeMap::new();
        for (link, msg) in inbox.iter() {
            if let Some(set) = pick(msg) {
                for id in set {
                    by_id.entry(*id).or_default().insert(link);
                }
            }
        }
        by_id
    }

    fn collect_ids(&mut self, inbox: &RoundInbox) {
        self.ids = inbox
            .iter()
            .filter_map(|(_, m)| match m {
                Msg::Id(id) => Some(*id),
                _ => None,
            })
            .collect();
    }

    fn filter_echoes(&mut self, inbox: &RoundInbox) {
        let quorum = self.params.quorum();
        self.ids = Self::count_links(inbox, |m| match m {
            Msg::Echo(s) => Some(s),
            _ => None,
        })
        .into_iter()
        .filter(|(_, links)| links.len() >= quorum)
        .map(|(id, _)| id)
        .collect();
    }

    fn record_readies(&mut self, inbox: &RoundInbox) {
        let seen = Self::count_links(inbox, |m| match m {
            Msg::Ready(s) => Some(s),
            _ => None,
        });
        for (id, links) in seen {
            self.ready_links.entry(id).or_default().extend(links);
        }
    }

    fn ready_count(&self, id: &ProcId) -> usize {
        self.ready_links.get(id).map_or(0, |l| l.len())
    }

    fn build_timely(&mut self, inbox: &RoundInbox) {
        self.record_readies(inbox);
        let quorum = self.params.quorum();
        let weak = self.params.weak_quorum();
        self.timely = self
            .ready_links
            .iter()
            .filter(|(_, l)| l.len() >= quorum)
            .map(|(id, _)| *id)
            .collect();
        self.ids = self
            .ready_links
            .iter()
            .filter(|(id, l)| l.len() >= weak && !self.ready_sent.contains(id))
            .map(|(id, _)| *id)
            .collect();
    }

    fn accept(&mut self, inbox: &RoundInbox) -> Result<(), ProtocolError> {
        self.record_readies(inbox);
        let quorum = self.params.quorum();
        self.accepted = self
            .ready_links
            .keys()
            .filter(|id| self.ready_count(id) >= quorum)
            .copied()
            .collect();
        if !self.accepted.contains(&self.my_id) {
            return Err(ProtocolError::OwnIdNotAccepted(self.my_id));
        }
        self.ranks = self
            .accepted
            .iter()
            .map(|&id| {
                let pos = rank_in(&self.accepted, id).expect("id taken from the set");
                (id, self.delta.mul_int(pos as i64))
            })
            .collect();
        Ok(())
    }

    fn vote(&mut self, inbox: &RoundInbox) -> Result<(), ProtocolError> {
        let mut valid = Vec::new();
        self.rejected_votes.clear();
        for (link, msg) in inbox.iter() {
            if let Msg::Aa(r) = msg {
                if is_valid(&self.timely, r, &self.delta) {
                    valid.push(r);
                } else {
                    self.rejected_votes.push(link);
                }
            }
        }
        let new_ranks = approximate(&self.ranks, &valid, &mut self.accepted, &self.params);
        if !new_ranks.contains(&self.my_id) {
            return Err(ProtocolError::OwnIdDropped(self.my_id));
        }
        self.ranks = new_ranks;
        Ok(())
    }

    /// Rounds the final rank of the own id.
    pub fn decide(&self) -> Result<u64, ProtocolError> {
        let r = self
            .ranks
            .get(&self.my_id)
            .ok_or(ProtocolError::OwnIdDropped(self.my_id))?;
        r.round_nearest()
            .to_u64()
            .filter(|&v| v >= 1)
            .ok_or_else(|| ProtocolError::NameOutOfRange(r.to_string()))
    }
}

impl Protocol for OpbrState {
    fn my_id(&self) -> ProcId {
        self.my_id
    }

    fn broadcast(&mut self, round: u32) -> Result<Option<Msg>, ProtocolError> {
        Ok(Some(match round {
            1 => Msg::Id(self.my_id),
            2 => Msg::Echo(self.ids.clone()),
            3 | 4 => {
                self.ready_sent.extend(self.ids.iter().copied());
                Msg::Ready(self.ids.clone())
            }
            r if r <= self.last_round => Msg::Aa(self.ranks.clone()),
            r => return Err(ProtocolError::UnexpectedRound(r)),
        }))
    }

    fn deliver(&mut self, round: u32, inbox: &RoundInbox) -> Result<(), ProtocolError> {
        self.round = round;
        match round {
            1 => self.collect_ids(inbox),
            2 => self.filter_echoes(inbox),
            3 => self.build_timely(inbox),
            4 => {
                self.ids.clear();
                self.accept(inbox)?
            }
            r if r <= self.last_round => {
                self.vote(inbox)?;
                if r == self.last_round {
                    self.decided = Some(self.decide()?);
                }
            }
            r => return Err(ProtocolError::UnexpectedRound(r)),
        }
        Ok(())
    }

    fn decision(&self) -> Option<u64> {
        self.decided
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot::Opbr(OpbrSnapshot {
            my_id: self.my_id,
            round: self.round,
            ids: self.ids.clone(),
            timely: self.timely.clone(),
            accepted: self.accepted.clone(),
            ranks: self.ranks.clone(),
            ready_sent: self.ready_sent.clone(),
            rejected_votes: self.rejected_votes.clone(),
            decided: self.decided,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::Topology;
    use proptest::strategy::Strategy as _;

    fn r(n: i64, d: i64) -> Rank {
        Rank::new(n, d).unwrap()
    }

    fn ids(v: &[u64]) -> BTreeSet<ProcId> {
        v.iter().map(|&x| ProcId(x)).collect()
    }

    fn ranks(v: &[(u64, Rank)]) -> RanksMap {
        v.iter().map(|(i, r)| (ProcId(*i), r.clone())).collect()
    }

    fn ms(v: &[i64]) -> Multiset {
        v.iter().map(|&x| Rank::from_integer(x)).collect()
    }

    fn params(n: usize, t: usize) -> SystemParams {
        SystemParams::new(n, t, 10_000).unwrap()
    }

    #[test]
    fn is_valid_examples() {
        let d = r(16, 15);
        let timely = ids(&[5, 9]);
        assert!(is_valid(&timely, &ranks(&[(5, r(16, 15)), (9, r(32, 15))]), &d));
        assert!(!is_valid(&timely, &ranks(&[(5, r(16, 15))]), &d));
        assert!(!is_valid(&timely, &ranks(&[(5, r(2, 1)), (9, r(3, 1))]), &d));
        // ids outside timely are not inspected
        assert!(is_valid(
            &timely,
            &ranks(&[(5, r(1, 1)), (7, r(1, 1)), (9, r(3, 1))]),
            &d
        ));
        assert!(is_valid(&BTreeSet::new(), &RanksMap::new(), &d));
    }

    #[test]
    fn select_t_examples() {
        assert_eq!(select_t(&ms(&[1, 2, 3, 4, 5]), 2), ms(&[1, 3, 5]));
        assert_eq!(select_t(&ms(&[10, 20]), 1), ms(&[10, 20]));
        assert_eq!(select_t(&ms(&[7]), 3), ms(&[7]));
        assert_eq!(select_t(&ms(&[]), 2), ms(&[]));
        assert_eq!(select_t(&ms(&[1, 2, 3]), 0), ms(&[1, 2, 3]));
    }

    #[test]
    fn selection_counts() {
        assert_eq!(c_sel(&params(4, 1)), 2);
        assert_eq!(sigma_t_closed_form(&params(4, 1)), Some(3));
        assert_eq!(c_sel(&params(7, 2)), 2);
        assert_eq!(sigma_t_closed_form(&params(7, 2)), Some(2));
        assert_eq!(c_sel(&params(9, 2)), 3);
        assert_eq!(c_sel(&params(4, 0)), 4);
        assert_eq!(sigma_t_closed_form(&params(4, 0)), None);
    }

    #[test]
    fn round_budgets() {
        assert_eq!(round_budget(&params(4, 1), Variant::Log).unwrap(), 3);
        assert_eq!(total_rounds(&params(4, 1), Variant::Log).unwrap(), 7);
        assert_eq!(total_rounds(&params(9, 2), Variant::Const).unwrap(), 8);
        assert_eq!(round_budget(&params(13, 4), Variant::Log).unwrap(), 9);
        assert_eq!(total_rounds(&params(13, 4), Variant::Log).unwrap(), 13);
        assert_eq!(total_rounds(&params(7, 2), Variant::Log).unwrap(), 10);
        assert_eq!(total_rounds(&params(10, 3), Variant::Log).unwrap(), 13);
        assert_eq!(round_budget(&params(4, 0), Variant::Log).unwrap(), 3);
        let err = round_budget(&params(8, 2), Variant::Const).unwrap_err();
        assert!(err.to_string().contains("N > t²+2t"));
    }

    #[test]
    fn ceil_log2_values() {
        let got: Vec<u32> = (1..=9).map(ceil_log2).collect();
        assert_eq!(got, vec![0, 1, 2, 2, 3, 3, 3, 3, 4]);
    }

    /// Independent trimmed-selection average: sort, drop t at both ends, keep
    /// positions 0, t, 2t, ...
    fn oracle_step(mut votes: Vec<Rank>, own: Rank, n: usize, t: usize) -> Rank {
        while votes.len() < n {
            votes.push(own.clone());
        }
        votes.sort();
        let kept: Vec<Rank> = votes[t..n - t].to_vec();
        let picked: Vec<&Rank> = kept.iter().enumerate().filter(|(i, _)| i % t.max(1) == 0).map(|(_, v)| v).collect();
        let sum = picked.iter().fold(Rank::zero(), |a, v| &a + v);
        sum.div_int(picked.len() as i64)
    }

    fn single_id_step(vals: &[Rank], own: Rank, n: usize, t: usize) -> Option<Rank> {
        let id = ProcId(1);
        let my = ranks(&[(1, own)]);
        let maps: Vec<RanksMap> = vals.iter().map(|v| ranks(&[(1, v.clone())])).collect();
        let refs: Vec<&RanksMap> = maps.iter().collect();
        let mut accepted = ids(&[1]);
        approximate(&my, &refs, &mut accepted, &params(n, t)).get(&id).cloned()
    }

    #[test]
    fn approximate_examples() {
        let v = |x: &[i64]| x.iter().map(|&a| Rank::from_integer(a)).collect::<Vec<_>>();
        assert_eq!(single_id_step(&v(&[1, 1, 2, 2]), Rank::from_integer(1), 4, 1), Some(r(3, 2)));
        assert_eq!(single_id_step(&v(&[0, 0, 0, 4]), Rank::zero(), 4, 1), Some(Rank::zero()));
        assert_eq!(single_id_step(&v(&[7, 7, 7]), Rank::from_integer(7), 4, 1), Some(Rank::from_integer(7)));
        assert_eq!(
            oracle_step(v(&[1, 1, 2, 2]), Rank::from_integer(1), 4, 1),
            r(3, 2)
        );
    }

    #[test]
    fn approximate_drops_ids_below_quorum() {
        let my = ranks(&[(1, r(1, 1)), (2, r(2, 1))]);
        let only_one = ranks(&[(1, r(1, 1))]);
        let votes = vec![&my, &only_one, &only_one];
        let mut accepted = ids(&[1, 2]);
        let out = approximate(&my, &votes, &mut accepted, &params(4, 1));
        assert_eq!(accepted, ids(&[1]));
        assert_eq!(out.len(), 1);
    }

    proptest::proptest! {
        #[test]
        fn approximate_matches_trimmed_oracle(
            (n, t) in (1usize..5).prop_flat_map(|t| ((3 * t + 1)..(3 * t + 7), proptest::strategy::Just(t))),
            raw in proptest::collection::vec((-50i64..50, 1i64..7), 1..12),
            own in (-50i64..50, 1i64..7),
        ) {
            let own = r(own.0, own.1);
            let quorum = n - t;
            let vals: Vec<Rank> = raw.into_iter().take(n).map(|(a, b)| r(a, b)).collect();
            let got = single_id_step(&vals, own.clone(), n, t);
            if vals.len() < quorum {
                proptest::prop_assert_eq!(got, None);
            } else {
                proptest::prop_assert_eq!(got, Some(oracle_step(vals, own, n, t)));
            }
        }

        #[test]
        fn is_valid_adjacent_equals_all_pairs(
            entries in proptest::collection::btree_map(1u64..30, (-40i64..40, 1i64..4), 0..8),
            timely_raw in proptest::collection::btree_set(1u64..30, 0..6),
        ) {
            let d = r(16, 15);
            let map: RanksMap = entries.into_iter().map(|(k, (a, b))| (ProcId(k), r(a, b))).collect();
            let timely: BTreeSet<ProcId> = timely_raw.into_iter().map(ProcId).collect();
            let brute = timely.iter().all(|a| map.contains(a))
                && timely.iter().all(|a| timely.iter().filter(|b| a < *b).all(|b| {
                    (map.get(b).unwrap() - map.get(a).unwrap()) >= d
                }));
            proptest::prop_assert_eq!(is_valid(&timely, &map, &d), brute);
        }
    }

    /// Drives N correct processes by hand (no engine) to check the step
    /// functions in isolation.
    fn run_fault_free(id_list: &[u64], t: usize, variant: Variant) -> Vec<OpbrState> {
        let n = id_list.len();
        let p = params(n, t);
        let topo = Topology::from_seed(n, 3);
        let mut procs: Vec<OpbrState> = id_list
            .iter()
            .map(|&i| OpbrState::new(ProcId(i), p, variant).unwrap())
            .collect();
        let last = procs[0].last_round();
        for round in 1..=last {
            let sent: Vec<Msg> = procs.iter_mut().map(|s| s.broadcast(round).unwrap().unwrap()).collect();
            for (me, proc_) in procs.iter_mut().enumerate() {
                let inbox = RoundInbox {
                    by_link: (0..n)
                        .map(|s| (topo.label_at(me + 1, s + 1), sent[s].clone()))
                        .collect(),
                };
                proc_.deliver(round, &inbox).unwrap();
            }
        }
        procs
    }

    #[test]
    fn fault_free_step4_ranks() {
        let id_list = [10, 20, 30, 40];
        let n = id_list.len();
        let p = params(n, 1);
        let topo = Topology::from_seed(n, 3);
        let mut procs: Vec<OpbrState> = id_list
            .iter()
            .map(|&i| OpbrState::new(ProcId(i), p, Variant::Log).unwrap())
            .collect();
        for round in 1..=4 {
            let sent: Vec<Msg> = procs.iter_mut().map(|s| s.broadcast(round).unwrap().unwrap()).collect();
            for (me, proc_) in procs.iter_mut().enumerate() {
                let inbox = RoundInbox {
                    by_link: (0..n).map(|s| (topo.label_at(me + 1, s + 1), sent[s].clone())).collect(),
                };
                proc_.deliver(round, &inbox).unwrap();
            }
            if round == 3 {
                for s in &procs {
                    assert_eq!(s.timely, ids(&id_list));
                    assert!(s.ids.is_empty(), "no amplification when everyone is correct");
                }
            }
        }
        let expected = ranks(&[(10, r(16, 15)), (20, r(32, 15)), (30, r(48, 15)), (40, r(64, 15))]);
        for s in &procs {
            assert_eq!(s.ranks, expected);
            assert_eq!(s.accepted, ids(&id_list));
        }
    }

    #[test]
    fn fault_free_names_are_ranks() {
        for variant in [Variant::Log, Variant::Const] {
            let procs = run_fault_free(&[40, 10, 30, 20], 1, variant);
            let names: Vec<u64> = procs.iter().map(|s| s.decision().unwrap()).collect();
            assert_eq!(names, vec![4, 1, 3, 2]);
        }
        let procs = run_fault_free(&[7, 3, 9, 1], 0, Variant::Log);
        let names: Vec<u64> = procs.iter().map(|s| s.decision().unwrap()).collect();
        assert_eq!(names, vec![3, 2, 4, 1]);
    }

    #[test]
    fn own_id_missing_is_an_internal_failure() {
        let p = params(4, 1);
        let mut s = OpbrState::new(ProcId(10), p, Variant::Log).unwrap();
        for round in 1..=3 {
            s.broadcast(round).unwrap();
            s.deliver(round, &RoundInbox::default()).unwrap();
        }
        s.broadcast(4).unwrap();
        assert_eq!(
            s.deliver(4, &RoundInbox::default()),
            Err(ProtocolError::OwnIdNotAccepted(ProcId(10)))
        );
    }

    #[test]
    fn ready_counts_once_per_link_across_steps() {
        let p = params(4, 1);
        let mut s = OpbrState::new(ProcId(10), p, Variant::Log).unwrap();
        let ready = |v: &[u64]| Msg::Ready(ids(v));
        let inbox = |pairs: &[(usize, Msg)]| RoundInbox {
            by_link: pairs.iter().map(|(l, m)| (LinkLabel(*l), m.clone())).collect(),
        };
        s.deliver(1, &RoundInbox::default()).unwrap();
        s.deliver(2, &RoundInbox::default()).unwrap();
        s.deliver(3, &inbox(&[(1, ready(&[10, 77])), (2, ready(&[10])), (4, ready(&[10]))])).unwrap();
        assert_eq!(s.timely, ids(&[10]));
        // link 1 repeats READY(77) in step 4; still only one count for 77
        s.deliver(4, &inbox(&[(1, ready(&[77])), (3, ready(&[77]))])).unwrap();
        assert_eq!(s.accepted, ids(&[10]));
    }
}
