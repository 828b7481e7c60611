use std::collections::BTreeSet;

use byzren::adversary::Strategy;
use byzren::netsim::Snapshot;
use byzren::rank::Rank;
use byzren::runner::{execute, replay, FaultySpec, RunArtifacts, RunConfig};
use byzren::{Algorithm, ProcId};

fn cfg_with(n: usize, t: usize, algorithm: Algorithm, seed: u64, faulty: &[(usize, Strategy)]) -> RunConfig {
    let mut cfg = RunConfig::fault_free(n, t, algorithm, seed);
    cfg.faulty = faulty.iter().map(|(index, s)| FaultySpec { index: *index, strategy: s.clone() }).collect();
    cfg
}

fn run(cfg: &RunConfig) -> RunArtifacts {
    let a = execute(cfg).unwrap();
    assert!(a.report.all_passed(), "{:?}", a.report.failures().collect::<Vec<_>>());
    a
}

#[test]
fn fault_free_opbr_log_four_processes() {
    let a = run(&RunConfig::fault_free(4, 1, Algorithm::OpbrLog, 0));
    assert_eq!(a.report.names.values().copied().collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    assert_eq!(a.report.metrics.rounds_executed, 7);
    // 7 rounds, every process reaches every process including itself.
    assert_eq!(a.report.metrics.messages_delivered, 7 * 16);
    assert_eq!(a.report.constants.delta, Rank::new(16, 15).unwrap());
    assert_eq!(a.report.constants.c_sel, Some(2));
    assert_eq!(a.report.constants.sigma_t, Some(3));
}

#[test]
fn fault_free_spread_is_zero_throughout() {
    let a = run(&RunConfig::fault_free(7, 2, Algorithm::OpbrLog, 4));
    assert_eq!(a.spreads.per_id.len(), 7);
    for series in a.spreads.per_id.values() {
        assert_eq!(series.len(), 7);
        assert!(series.iter().all(|(_, d)| *d == Rank::zero()));
    }
}

#[test]
fn twostep_two_crashes_at_round_one() {
    let crash = Strategy::Crash { from_round: 1 };
    let a = run(&cfg_with(11, 2, Algorithm::TwoStep, 0, &[(3, crash.clone()), (8, crash)]));
    assert_eq!(a.report.names.len(), 9);
    for s in a.trace.round_snapshots(2).values() {
        let Snapshot::TwoStep(s) = s else { panic!("twostep snapshot") };
        assert_eq!(s.linkid.len(), 9);
        assert_eq!(s.echo_verdicts.len(), 9);
    }
}

#[test]
fn twostep_one_crash_keeps_gaps_of_three() {
    let a = run(&cfg_with(4, 1, Algorithm::TwoStep, 5, &[(2, Strategy::Crash { from_round: 2 })]));
    for s in a.trace.round_snapshots(2).values() {
        let Snapshot::TwoStep(s) = s else { panic!("twostep snapshot") };
        let correct: Vec<u64> = a.trace.correct.values().map(|id| s.newid[id]).collect();
        assert!(correct.windows(2).all(|w| w[1] - w[0] >= 3), "{correct:?}");
    }
}

#[test]
fn oversize_echoes_are_always_rejected() {
    let a = run(&cfg_with(11, 2, Algorithm::TwoStep, 2, &[(1, Strategy::OversizeEcho), (6, Strategy::OversizeEcho)]));
    let mut seen = 0;
    for d in a.trace.deliveries_in(2).filter(|d| a.trace.faulty.contains(&d.from_index)) {
        let Some(Snapshot::TwoStep(rx)) = a.trace.snapshot(2, d.to_index) else { continue };
        assert_eq!(d.msg.id_count(), 12);
        assert_eq!(rx.echo_verdicts.get(&d.link_label), Some(&false));
        seen += 1;
    }
    assert_eq!(seen, 2 * 9);
}

#[test]
fn collusion_at_nine_two_stays_within_nine() {
    let fakes: Vec<ProcId> = [13, 27, 44, 58].map(ProcId).to_vec();
    let collude = Strategy::ColludeInject { fakes };
    for seed in 0..5 {
        let a = run(&cfg_with(9, 2, Algorithm::OpbrLog, seed, &[(2, collude.clone()), (6, collude.clone())]));
        for s in a.trace.round_snapshots(4).values() {
            let Snapshot::Opbr(s) = s else { panic!("opbr snapshot") };
            assert!(s.accepted.len() <= 9, "{}", s.accepted.len());
        }
    }
}

#[test]
fn collusion_gets_a_byzantine_id_accepted() {
    let collude = Strategy::ColludeInject { fakes: Vec::new() };
    let a = run(&cfg_with(7, 2, Algorithm::OpbrLog, 0, &[(1, collude.clone()), (4, collude)]));
    let correct: BTreeSet<ProcId> = a.trace.correct.values().copied().collect();
    let accepted_fake = a.trace.round_snapshots(4).values().any(|s| match s {
        Snapshot::Opbr(s) => s.accepted.iter().any(|id| !correct.contains(id)),
        _ => false,
    });
    assert!(accepted_fake);
}

#[test]
fn large_skew_is_trimmed_away() {
    let skew = Strategy::SkewVotes { epsilon: Rank::from_integer(1000), targets: vec![ProcId(10), ProcId(30)] };
    let a = run(&cfg_with(7, 2, Algorithm::OpbrLog, 1, &[(2, skew.clone()), (5, skew)]));
    let half_gap = Rank::new(1, 6 * 9).unwrap();
    assert!(a.report.max_final_spread.unwrap() < half_gap);
}

#[test]
fn equivocating_ids_do_not_break_order() {
    let eq = Strategy::EquivocateIds { pool: Vec::new() };
    for seed in 0..5 {
        run(&cfg_with(10, 3, Algorithm::OpbrLog, seed, &[(1, eq.clone()), (5, eq.clone()), (9, eq.clone())]));
    }
}

#[test]
fn replay_reproduces_the_report() {
    let cfg = cfg_with(9, 2, Algorithm::OpbrConst, 7, &[(4, Strategy::RandomByz { seed: 3 }), (9, Strategy::Silent)]);
    let a = run(&cfg);
    assert_eq!(replay(&cfg, a.trace.deliveries.clone()).unwrap(), a.report);
}

#[test]
fn report_round_trips_through_json() {
    let cfg = cfg_with(7, 2, Algorithm::OpbrLog, 3, &[(2, Strategy::SkewVotes { epsilon: Rank::new(5, 2).unwrap(), targets: vec![] })]);
    let a = run(&cfg);
    let text = a.report.to_json();
    let back = byzren::runner::RunReport::from_json(&text).unwrap();
    assert_eq!(back, a.report);
    assert_eq!(back.to_json(), text);
    assert!(text.contains("\"schema_version\": 1"));
    assert!(text.contains("\"den\": \"27\""), "delta 28/27 serialized exactly");
}
