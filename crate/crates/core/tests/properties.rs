//! Randomized end-to-end properties: every admissible configuration with any
//! mix of catalog adversaries keeps every invariant, deterministically.

use byzren::adversary::Strategy;
use byzren::runner::{execute, faulty_indices, replay, FaultySpec, RunConfig};
use byzren::{Algorithm, ProcId};
use proptest::prelude::*;
use proptest::strategy::Strategy as Strategy_;

fn arb_config() -> impl Strategy_<Value = RunConfig> {
    (0usize..3, 4usize..12, any::<u64>(), prop::collection::vec(0usize..7, 4), prop::bool::ANY)
        .prop_flat_map(|(alg, n, seed, picks, fill)| {
            let algorithm = Algorithm::ALL[alg];
            let t_max = (1..n).rev().find(|&t| algorithm.admits(n, t)).unwrap_or(0);
            (Just((algorithm, n, seed, picks, fill)), 0..=t_max)
        })
        .prop_map(|((algorithm, n, seed, picks, fill), t)| {
            let mut cfg = RunConfig::fault_free(n, t, algorithm, seed);
            let rounds = byzren::checker::expected_rounds(&cfg.resolve().unwrap().params, algorithm).unwrap();
            let k = if fill { t } else { t / 2 };
            cfg.faulty = faulty_indices(n, k, seed)
                .into_iter()
                .zip(picks)
                .map(|(index, p)| FaultySpec {
                    index,
                    strategy: Strategy::by_name(Strategy::NAMES[p], seed ^ index as u64, rounds).unwrap(),
                })
                .collect();
            cfg
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mixed_adversaries_never_break_invariants(cfg in arb_config()) {
        let a = execute(&cfg).unwrap();
        let fails: Vec<_> = a.report.failures().cloned().collect();
        prop_assert!(fails.is_empty(), "{:?}", fails);
        prop_assert_eq!(a.report.names.len(), cfg.n - cfg.faulty.len());
    }

    #[test]
    fn runs_are_deterministic_and_replayable(cfg in arb_config()) {
        let a = execute(&cfg).unwrap();
        let b = execute(&cfg).unwrap();
        prop_assert_eq!(a.report.to_json(), b.report.to_json());
        prop_assert_eq!(a.trace_jsonl(), b.trace_jsonl());
        prop_assert_eq!(replay(&cfg, a.trace.deliveries.clone()).unwrap(), a.report);
    }

    #[test]
    fn fault_free_names_follow_sorted_order(
        n in 4usize..10,
        raw in prop::collection::btree_set(1u64..500, 10),
        seed in any::<u64>(),
    ) {
        let ids: Vec<ProcId> = raw.into_iter().rev().take(n).map(ProcId).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        for algorithm in Algorithm::ALL {
            let Some(t) = (1..n).rev().find(|&t| algorithm.admits(n, t)) else { continue };
            let mut cfg = RunConfig::fault_free(n, t, algorithm, seed);
            cfg.correct_ids = Some(ids.clone());
            cfg.n_max = Some(500);
            let a = execute(&cfg).unwrap();
            for (pos, id) in sorted.iter().enumerate() {
                let rank = pos as u64 + 1;
                let want = if algorithm == Algorithm::TwoStep { rank * (n - t) as u64 } else { rank };
                prop_assert_eq!(a.report.names[id], want);
            }
        }
    }
}
