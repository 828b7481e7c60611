//! Post-hoc invariant checks over a run's trace and decided names.
//!
//! Each check returns a [`CheckResult`]; a failing one carries a witness with
//! the round, process indices and ids needed to find the violation again.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::CheckerError;
use crate::netsim::{RunMetrics, Snapshot, TraceLog};
use crate::opbr::{c_sel, is_valid, total_rounds, OpbrSnapshot, Variant};
use crate::rank::{delta, spread, Rank};
use crate::twostep::{TwoStepSnapshot, ROUNDS as TWOSTEP_ROUNDS};
use crate::types::{Algorithm, Msg, ProcId, SystemParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<String>,
}

impl CheckResult {
    pub fn pass(name: &str) -> Self {
        CheckResult { name: name.to_string(), status: Status::Pass, witness: None }
    }

    pub fn fail(name: &str, witness: impl Into<String>) -> Self {
        CheckResult { name: name.to_string(), status: Status::Fail, witness: Some(witness.into()) }
    }

    fn from_first(name: &str, witness: Option<String>) -> Self {
        match witness {
            None => Self::pass(name),
            Some(w) => Self::fail(name, w),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Largest name each algorithm may output.
pub fn namespace_bound(params: &SystemParams, algorithm: Algorithm) -> u64 {
    let (n, t) = (params.n as u64, params.t as u64);
    match algorithm {
        Algorithm::OpbrLog => (n + t).saturating_sub(1).max(n),
        Algorithm::OpbrConst => n,
        Algorithm::TwoStep => n * n,
    }
}

/// Bound on `|accepted|` after id selection: `N + floor(t^2 / (N - 2t))`.
pub fn accepted_bound(params: &SystemParams) -> usize {
    let t = params.t;
    params.n + if t == 0 { 0 } else { t * t / params.weak_quorum() }
}

pub fn expected_rounds(params: &SystemParams, algorithm: Algorithm) -> Option<u32> {
    match Variant::of(algorithm) {
        Some(v) => total_rounds(params, v).ok(),
        None => Some(TWOSTEP_ROUNDS),
    }
}

pub fn check_uniqueness(names: &BTreeMap<ProcId, u64>) -> CheckResult {
    let mut owner: BTreeMap<u64, ProcId> = BTreeMap::new();
    for (&id, &name) in names {
        if let Some(prev) = owner.insert(name, id) {
            return CheckResult::fail("uniqueness", format!("ids {prev} and {id} both decided {name}"));
        }
    }
    CheckResult::pass("uniqueness")
}

pub fn check_order(names: &BTreeMap<ProcId, u64>) -> CheckResult {
    let witness = names
        .iter()
        .zip(names.iter().skip(1))
        .find(|((_, a), (_, b))| a >= b)
        .map(|((ia, a), (ib, b))| format!("id {ia} < id {ib} but names {a} >= {b}"));
    CheckResult::from_first("order-preservation", witness)
}

pub fn check_namespace(names: &BTreeMap<ProcId, u64>, bound: u64) -> CheckResult {
    let witness = names
        .iter()
        .find(|(_, &v)| v < 1 || v > bound)
        .map(|(id, v)| format!("id {id} decided {v} outside [1, {bound}]"));
    CheckResult::from_first("namespace", witness)
}

pub fn check_metrics(metrics: &RunMetrics, params: &SystemParams, algorithm: Algorithm) -> CheckResult {
    let name = "metrics";
    let Some(rounds) = expected_rounds(params, algorithm) else {
        return CheckResult::fail(name, format!("{algorithm} does not admit N = {}, t = {}", params.n, params.t));
    };
    if metrics.rounds_executed != rounds {
        return CheckResult::fail(
            name,
            format!("executed {} rounds, {algorithm} takes exactly {rounds}", metrics.rounds_executed),
        );
    }
    let cap = match algorithm {
        Algorithm::TwoStep => params.n,
        _ => namespace_bound(params, Algorithm::OpbrLog) as usize,
    };
    if metrics.max_message_ids > cap {
        return CheckResult::fail(
            name,
            format!("a correct message carried {} ids, cap is {cap}", metrics.max_message_ids),
        );
    }
    let n = params.n as u64;
    if metrics.messages_delivered > u64::from(metrics.rounds_executed) * n * n {
        return CheckResult::fail(name, format!("{} deliveries exceed rounds·n²", metrics.messages_delivered));
    }
    CheckResult::pass(name)
}

/// Per-id spread of the correct ranks after each step from 4 on.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpreadSeries {
    pub per_id: BTreeMap<ProcId, Vec<(u32, Rank)>>,
}

impl SpreadSeries {
    /// Largest spread at the last recorded step, over all ids.
    pub fn max_final(&self) -> Option<Rank> {
        self.per_id.values().filter_map(|s| s.last().map(|(_, r)| r.clone())).max()
    }
}

struct Rounds<'a, S> {
    by_round: BTreeMap<u32, BTreeMap<usize, &'a S>>,
}

impl<'a, S> Rounds<'a, S> {
    fn at(&self, round: u32) -> &BTreeMap<usize, &'a S> {
        &self.by_round[&round]
    }
}

fn collect_rounds<'a, S>(
    trace: &'a TraceLog,
    rounds: u32,
    expected: &'static str,
    pick: impl Fn(&'a Snapshot) -> Option<&'a S>,
) -> Result<Rounds<'a, S>, CheckerError> {
    if trace.correct.is_empty() {
        return Err(CheckerError::NoCorrectProcesses);
    }
    let mut by_round = BTreeMap::new();
    for round in 1..=rounds {
        let snaps = trace.round_snapshots(round);
        let mut typed = BTreeMap::new();
        for &index in trace.correct.keys() {
            let snap = snaps
                .get(&index)
                .ok_or(CheckerError::MissingSnapshot { index, round })?;
            let s = pick(snap).ok_or(CheckerError::WrongSnapshotKind { expected, found: snap.kind() })?;
            typed.insert(index, s);
        }
        by_round.insert(round, typed);
    }
    Ok(Rounds { by_round })
}

fn opbr_snapshots(trace: &TraceLog, rounds: u32) -> Result<Rounds<'_, OpbrSnapshot>, CheckerError> {
    collect_rounds(trace, rounds, "opbr", |s| match s {
        Snapshot::Opbr(o) => Some(o),
        _ => None,
    })
}

fn twostep_snapshots(trace: &TraceLog) -> Result<Rounds<'_, TwoStepSnapshot>, CheckerError> {
    collect_rounds(trace, TWOSTEP_ROUNDS, "twostep", |s| match s {
        Snapshot::TwoStep(o) => Some(o),
        _ => None,
    })
}

/// Ids considered timely by at least one correct process after step 4.
fn union_timely(snaps: &BTreeMap<usize, &OpbrSnapshot>) -> BTreeSet<ProcId> {
    snaps.values().flat_map(|s| s.timely.iter().copied()).collect()
}

/// Spread series over every id that some correct process holds as timely.
/// A series stops at the first step where some correct process lacks the id.
pub fn spread_series(trace: &TraceLog, params: &SystemParams, algorithm: Algorithm) -> Result<SpreadSeries, CheckerError> {
    let Some(rounds) = expected_rounds(params, algorithm).filter(|_| algorithm != Algorithm::TwoStep) else {
        return Ok(SpreadSeries::default());
    };
    let rounds = rounds.min(trace.rounds());
    if rounds < 4 {
        return Ok(SpreadSeries::default());
    }
    let snaps = opbr_snapshots(trace, rounds)?;
    let ids = union_timely(snaps.at(4));
    let mut series = SpreadSeries::default();
    for id in ids {
        let mut points = Vec::new();
        for r in 4..=rounds {
            let vals: Option<Vec<&Rank>> = snaps.at(r).values().map(|s| s.ranks.get(&id)).collect();
            match vals {
                Some(v) => points.push((r, spread(v).expect("at least one correct process"))),
                None => break,
            }
        }
        series.per_id.insert(id, points);
    }
    Ok(series)
}

fn rank_of<'s>(s: &'s OpbrSnapshot, id: &ProcId) -> Option<&'s Rank> {
    s.ranks.get(id)
}

/// Every protocol-level invariant that applies to `algorithm`.
pub fn check_protocol_invariants(
    trace: &TraceLog,
    params: &SystemParams,
    algorithm: Algorithm,
) -> Result<Vec<CheckResult>, CheckerError> {
    match Variant::of(algorithm) {
        Some(_) => opbr_suite(trace, params),
        None => twostep_suite(trace, params),
    }
}

fn opbr_suite(trace: &TraceLog, params: &SystemParams) -> Result<Vec<CheckResult>, CheckerError> {
    let rounds = trace.rounds();
    if rounds < 4 {
        return Err(CheckerError::MissingSnapshot {
            index: trace.correct.keys().next().copied().unwrap_or(1),
            round: 4,
        });
    }
    let snaps = opbr_snapshots(trace, rounds)?;
    let d = delta(params);
    let s4 = snaps.at(4);
    let correct_ids: BTreeSet<ProcId> = trace.correct.values().copied().collect();
    let timely_union = union_timely(s4);
    let mut out = Vec::new();

    // Timely anywhere implies accepted everywhere.
    let mut w = None;
    'l1: for (p, sp) in s4 {
        for id in &sp.timely {
            for (q, sq) in s4 {
                if !sq.accepted.contains(id) {
                    w = Some(format!("round 4: id {id} timely at process {p}, not accepted at process {q}"));
                    break 'l1;
                }
            }
        }
    }
    out.push(CheckResult::from_first("timely-implies-accepted", w));

    // Correct ids are timely everywhere.
    let w = s4.iter().find_map(|(q, sq)| {
        correct_ids
            .iter()
            .find(|id| !sq.timely.contains(id))
            .map(|id| format!("round 4: correct id {id} not timely at process {q}"))
    });
    out.push(CheckResult::from_first("correct-ids-timely", w));

    let bound = accepted_bound(params);
    let w = s4
        .iter()
        .find(|(_, s)| s.accepted.len() > bound)
        .map(|(p, s)| format!("round 4: process {p} accepted {} ids, bound {bound}", s.accepted.len()));
    out.push(CheckResult::from_first("accepted-size-bound", w));

    // Correct votes pass every correct validator.
    let mut w = None;
    'l4: for r in 5..=rounds {
        let prev = snaps.at(r - 1);
        for (p, sp) in prev {
            for (q, sq) in prev {
                if !is_valid(&sp.timely, &sq.ranks, &d) {
                    w = Some(format!("round {r}: vote of process {q} invalid under timely set of process {p}"));
                    break 'l4;
                }
            }
        }
    }
    out.push(CheckResult::from_first("correct-votes-valid", w));

    // Correct ids stay delta apart from step 4 on.
    let mut w = None;
    let sorted_correct: Vec<ProcId> = correct_ids.iter().copied().collect();
    'c2: for r in 4..=rounds {
        for (p, sp) in snaps.at(r) {
            for pair in sorted_correct.windows(2) {
                match (rank_of(sp, &pair[0]), rank_of(sp, &pair[1])) {
                    (Some(a), Some(b)) if (b - a) >= d => {}
                    (a, b) => {
                        w = Some(format!(
                            "round {r}: process {p} ranks id {} at {a:?} and id {} at {b:?}, gap below {d}",
                            pair[0], pair[1]
                        ));
                        break 'c2;
                    }
                }
            }
        }
    }
    out.push(CheckResult::from_first("correct-rank-gap", w));

    // Initial discrepancy of timely ids.
    let limit = d.mul_int((params.t + accepted_bound(params) - params.n) as i64);
    let mut w = None;
    'l7: for (p, sp) in s4 {
        for id in &sp.timely {
            for (q, sq) in s4 {
                match (rank_of(sp, id), rank_of(sq, id)) {
                    (Some(a), Some(b)) if (a - b).abs() <= limit => {}
                    (a, b) => {
                        w = Some(format!(
                            "round 4: id {id} ranked {a:?} at process {p} and {b:?} at process {q}, limit {limit}"
                        ));
                        break 'l7;
                    }
                }
            }
        }
    }
    out.push(CheckResult::from_first("initial-rank-discrepancy", w));

    // Containment and contraction per approximation step.
    let c = c_sel(params).max(1) as i64;
    let mut contain = None;
    let mut contract = None;
    for r in 5..=rounds {
        for id in &timely_union {
            let old: Option<Vec<&Rank>> = snaps.at(r - 1).values().map(|s| rank_of(s, id)).collect();
            let new: Option<Vec<(usize, &Rank)>> =
                snaps.at(r).iter().map(|(i, s)| rank_of(s, id).map(|v| (*i, v))).collect();
            let (Some(old), Some(new)) = (old, new) else {
                contain.get_or_insert_with(|| format!("round {r}: timely id {id} missing at some correct process"));
                continue;
            };
            let lo = old.iter().min().copied().expect("non-empty");
            let hi = old.iter().max().copied().expect("non-empty");
            if let Some((i, v)) = new.iter().find(|(_, v)| *v < lo || *v > hi) {
                contain.get_or_insert_with(|| {
                    format!("round {r}: process {i} moved id {id} to {v}, outside [{lo}, {hi}]")
                });
            }
            let before = hi - lo;
            let after = spread(new.iter().map(|(_, v)| *v)).expect("non-empty");
            if after > before.div_int(c) {
                contract.get_or_insert_with(|| {
                    format!("round {r}: id {id} spread {after} exceeds previous spread {before} / {c}")
                });
            }
        }
    }
    out.push(CheckResult::from_first("step-containment", contain));
    out.push(CheckResult::from_first("step-contraction", contract));

    // Final spread below (delta - 1) / 2.
    let half_gap = (&d - &Rank::one()).div_int(2);
    let finals = snaps.at(rounds);
    let mut w = None;
    for id in &timely_union {
        let vals: Option<Vec<&Rank>> = finals.values().map(|s| rank_of(s, id)).collect();
        match vals {
            Some(v) => {
                let sp = spread(v).expect("non-empty");
                if sp >= half_gap {
                    w = Some(format!("round {rounds}: id {id} final spread {sp} not below {half_gap}"));
                    break;
                }
            }
            None => {
                w = Some(format!("round {rounds}: timely id {id} missing at some correct process"));
                break;
            }
        }
    }
    out.push(CheckResult::from_first("final-spread", w));
    Ok(out)
}

fn twostep_suite(trace: &TraceLog, params: &SystemParams) -> Result<Vec<CheckResult>, CheckerError> {
    let snaps = twostep_snapshots(trace)?;
    let s2 = snaps.at(TWOSTEP_ROUNDS);
    let correct_ids: BTreeSet<ProcId> = trace.correct.values().copied().collect();
    let t = params.t as u64;
    let mut out = Vec::new();

    // Cross-process discrepancy of correct ids.
    let limit = 2 * t * t;
    let mut w = None;
    for id in &correct_ids {
        let vals: Option<Vec<(usize, u64)>> = s2.iter().map(|(i, s)| s.newid.get(id).map(|v| (*i, *v))).collect();
        let Some(vals) = vals else {
            w = Some(format!("correct id {id} has no name estimate at some correct process"));
            break;
        };
        let (pl, lo) = vals.iter().min_by_key(|(_, v)| *v).copied().expect("non-empty");
        let (ph, hi) = vals.iter().max_by_key(|(_, v)| *v).copied().expect("non-empty");
        if hi - lo > limit {
            w = Some(format!("id {id}: newid {lo} at process {pl}, {hi} at process {ph}, limit {limit}"));
            break;
        }
    }
    out.push(CheckResult::from_first("name-discrepancy", w));

    // Adjacent correct names at least n - t apart.
    let gap = params.quorum() as u64;
    let sorted: Vec<ProcId> = correct_ids.iter().copied().collect();
    let mut w = None;
    'l13: for (p, s) in s2 {
        for pair in sorted.windows(2) {
            match (s.newid.get(&pair[0]), s.newid.get(&pair[1])) {
                (Some(a), Some(b)) if *b >= a + gap => {}
                (a, b) => {
                    w = Some(format!(
                        "process {p}: id {} -> {a:?}, id {} -> {b:?}, gap below {gap}",
                        pair[0], pair[1]
                    ));
                    break 'l13;
                }
            }
        }
    }
    out.push(CheckResult::from_first("correct-name-gap", w));

    // Valid echoes from faulty links carry at most 2t Byzantine ids; oversize
    // echoes are never valid.
    let mut byz_w = None;
    let mut size_w = None;
    for d in trace.deliveries_in(TWOSTEP_ROUNDS) {
        let Msg::MultiEcho(ids) = &d.msg else { continue };
        let Some(rx) = s2.get(&d.to_index) else { continue };
        let valid = rx.echo_verdicts.get(&d.link_label).copied().unwrap_or(false);
        if ids.len() > params.n && valid {
            size_w.get_or_insert_with(|| {
                format!("process {} accepted a {}-id echo from process {}", d.to_index, ids.len(), d.from_index)
            });
        }
        if valid && trace.faulty.contains(&d.from_index) {
            let byz = ids.iter().filter(|id| !correct_ids.contains(id)).count();
            if byz > 2 * params.t {
                byz_w.get_or_insert_with(|| {
                    format!(
                        "process {} accepted {byz} Byzantine ids from process {}, limit {}",
                        d.to_index,
                        d.from_index,
                        2 * params.t
                    )
                });
            }
        }
    }
    out.push(CheckResult::from_first("byzantine-echo-bound", byz_w));
    out.push(CheckResult::from_first("oversize-echo-rejected", size_w));
    Ok(out)
}
