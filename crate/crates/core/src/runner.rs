//! JSON run configurations, reports, batch sweeps and trace replay.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufReader;
use std::path::Path;

use rand::seq::IteratorRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::adversary::{Byzantine, Strategy};
use crate::checker::{
    check_protocol_invariants, check_metrics, check_namespace, check_order, check_uniqueness, expected_rounds,
    namespace_bound, spread_series, CheckResult, SpreadSeries,
};
use crate::error::{ConfigError, RunError};
use crate::netsim::{read_jsonl, run_protocol, Delivery, ProcessHandle, Protocol, RunMetrics, TraceLog};
use crate::opbr::{c_sel, sigma_t_closed_form, OpbrState, Variant};
use crate::rank::{delta, Rank};
use crate::twostep::TwoStepState;
use crate::types::{Algorithm, Msg, ProcId, SystemParams};

pub const SCHEMA_VERSION: u32 = 1;

/// Parallelism degree for sweeps; unset means one thread per core.
pub const THREADS_ENV: &str = "BYZREN_THREADS";

/// One faulty process: `{"index": 2, "strategy": "crash", "params": {...}}`.
/// `params` may be omitted when every parameter has a default.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFaulty", into = "RawFaulty")]
pub struct FaultySpec {
    pub index: usize,
    pub strategy: Strategy,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFaulty {
    index: usize,
    strategy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<Value>,
}

impl TryFrom<RawFaulty> for FaultySpec {
    type Error = String;

    fn try_from(raw: RawFaulty) -> Result<Self, String> {
        let attempt = |params: Option<Value>| {
            let mut v = json!({ "strategy": raw.strategy });
            if let Some(p) = params {
                v["params"] = p;
            }
            serde_json::from_value::<Strategy>(v)
        };
        let strategy = match &raw.params {
            Some(p) => attempt(Some(p.clone())),
            None => attempt(None).or_else(|_| attempt(Some(json!({})))),
        }
        .map_err(|e| format!("faulty process {}: {e}", raw.index))?;
        Ok(FaultySpec { index: raw.index, strategy })
    }
}

impl From<FaultySpec> for RawFaulty {
    fn from(f: FaultySpec) -> Self {
        let v = serde_json::to_value(&f.strategy).expect("strategy serializes");
        RawFaulty {
            index: f.index,
            strategy: v["strategy"].as_str().expect("tagged").to_string(),
            params: v.get("params").cloned(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub t: usize,
    pub algorithm: Algorithm,
    /// Ids of the correct processes in index order. Defaults to `10 * index`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct_ids: Option<Vec<ProcId>>,
    /// Upper end of the original namespace. Defaults to `10 * (n + 1)` or the
    /// largest correct id, whichever is larger.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u64>,
    #[serde(default)]
    pub faulty: Vec<FaultySpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub emit_trace: bool,
}

/// A config after validation: parameters plus the role of every index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resolved {
    pub params: SystemParams,
    pub correct: BTreeMap<usize, ProcId>,
    pub faulty: BTreeMap<usize, Strategy>,
}

impl RunConfig {
    pub fn fault_free(n: usize, t: usize, algorithm: Algorithm, seed: u64) -> Self {
        RunConfig { n, t, algorithm, correct_ids: None, n_max: None, faulty: Vec::new(), seed, emit_trace: false }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Malformed(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        Ok(Self::from_json(&text)?)
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let default_max = 10 * (self.n as u64 + 1);
        let id_max = self.correct_ids.iter().flatten().map(|id| id.0).max().unwrap_or(0);
        let n_max = self.n_max.unwrap_or(default_max.max(id_max));
        let params = SystemParams::for_algorithm(self.n, self.t, n_max, self.algorithm)?;

        if self.faulty.len() > self.t {
            return Err(ConfigError::TooManyFaulty { faulty: self.faulty.len(), t: self.t });
        }
        let mut faulty = BTreeMap::new();
        for f in &self.faulty {
            if f.index == 0 || f.index > self.n {
                return Err(ConfigError::FaultyIndexOutOfRange { index: f.index, n: self.n });
            }
            f.strategy.validate()?;
            if faulty.insert(f.index, f.strategy.clone()).is_some() {
                return Err(ConfigError::DuplicateFaultyIndex(f.index));
            }
        }

        let indices: Vec<usize> = (1..=self.n).filter(|i| !faulty.contains_key(i)).collect();
        let ids: Vec<ProcId> = match &self.correct_ids {
            None => indices.iter().map(|&i| ProcId(10 * i as u64)).collect(),
            Some(ids) => {
                if ids.len() != indices.len() {
                    return Err(ConfigError::CorrectIdCount { expected: indices.len(), got: ids.len() });
                }
                ids.clone()
            }
        };
        let mut seen = BTreeSet::new();
        for id in &ids {
            if id.0 > n_max {
                return Err(ConfigError::CorrectIdOutOfRange { id: *id, n_max });
            }
            if !seen.insert(*id) {
                return Err(ConfigError::DuplicateCorrectId(*id));
            }
        }
        Ok(Resolved { params, correct: indices.into_iter().zip(ids).collect(), faulty })
    }
}

fn correct_protocol(id: ProcId, params: SystemParams, algorithm: Algorithm) -> Result<Box<dyn Protocol>, ConfigError> {
    Ok(match Variant::of(algorithm) {
        Some(v) => Box::new(OpbrState::new(id, params, v)?),
        None => Box::new(TwoStepState::new(id, params)?),
    })
}

impl Resolved {
    fn handles(&self, algorithm: Algorithm, seed: u64) -> Result<Vec<ProcessHandle>, ConfigError> {
        let mut out = Vec::with_capacity(self.params.n);
        for index in 1..=self.params.n {
            let kind = match (self.correct.get(&index), self.faulty.get(&index)) {
                (Some(&id), _) => crate::netsim::ProcessKind::Correct(correct_protocol(id, self.params, algorithm)?),
                (None, Some(strategy)) => {
                    let nominal = ProcId(10 * index as u64);
                    crate::netsim::ProcessKind::Faulty(Box::new(Byzantine::new(
                        strategy.clone(),
                        algorithm,
                        self.params,
                        nominal,
                        seed,
                        index,
                    )?))
                }
                (None, None) => unreachable!("every index is correct or faulty"),
            };
            out.push(ProcessHandle { index, kind });
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constants {
    pub delta: Rank,
    /// Closed-form convergence rate `floor((N - 2t) / t) + 1`, for reference.
    #[serde(rename = "sigma_t_paper")]
    pub sigma_t: Option<usize>,
    pub c_sel: Option<usize>,
    /// Total number of rounds the algorithm runs for these parameters.
    pub round_budget: u32,
}

impl Constants {
    pub fn for_params(params: &SystemParams, algorithm: Algorithm) -> Self {
        let opbr = algorithm != Algorithm::TwoStep;
        Constants {
            delta: delta(params),
            sigma_t: if opbr { sigma_t_closed_form(params) } else { None },
            c_sel: opbr.then(|| c_sel(params)),
            round_budget: expected_rounds(params, algorithm).unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub names: BTreeMap<ProcId, u64>,
    pub metrics: RunMetrics,
    pub checks: Vec<CheckResult>,
    #[serde(rename = "paper_constants")]
    pub constants: Constants,
    /// Largest final spread over timely ids; absent for twostep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_final_spread: Option<Rank>,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Everything one run produces.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub report: RunReport,
    pub trace: TraceLog,
    pub spreads: SpreadSeries,
}

impl RunArtifacts {
    pub fn trace_jsonl(&self) -> String {
        self.trace.to_jsonl(&trace_header(&self.report.config))
    }
}

fn trace_header(config: &RunConfig) -> Value {
    json!({ "header": { "schema_version": SCHEMA_VERSION, "config": config } })
}

fn assemble(
    config: &RunConfig,
    params: &SystemParams,
    names: BTreeMap<ProcId, u64>,
    metrics: RunMetrics,
    trace: &TraceLog,
) -> Result<(RunReport, SpreadSeries), RunError> {
    let algorithm = config.algorithm;
    let mut checks = vec![
        check_uniqueness(&names),
        check_order(&names),
        check_namespace(&names, namespace_bound(params, algorithm)),
        check_metrics(&metrics, params, algorithm),
    ];
    checks.extend(check_protocol_invariants(trace, params, algorithm)?);
    let spreads = spread_series(trace, params, algorithm)?;
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        names,
        metrics,
        checks,
        constants: Constants::for_params(params, algorithm),
        max_final_spread: spreads.max_final(),
    };
    Ok((report, spreads))
}

/// Runs one configuration and checks it.
pub fn execute(config: &RunConfig) -> Result<RunArtifacts, RunError> {
    let resolved = config.resolve()?;
    let params = resolved.params;
    let rounds = expected_rounds(&params, config.algorithm).expect("resolve checked resilience");
    let handles = resolved.handles(config.algorithm, config.seed)?;
    let out = run_protocol(&params, handles, rounds, config.seed)?;
    let (report, spreads) = assemble(config, &params, out.names, out.metrics, &out.trace)?;
    Ok(RunArtifacts { report, trace: out.trace, spreads })
}

pub fn run(config: &RunConfig) -> Result<RunReport, RunError> {
    execute(config).map(|a| a.report)
}

/// Re-executes the correct processes of a saved trace against its recorded
/// deliveries and checks the result. Fails if a replayed correct process
/// would have sent something other than what the trace records.
pub fn check_trace(path: &Path) -> Result<RunReport, RunError> {
    let file = std::fs::File::open(path).map_err(|e| RunError::io(path, e))?;
    let (header, deliveries) = read_jsonl(BufReader::new(file))?;
    let config: RunConfig = serde_json::from_value(header["header"]["config"].clone())
        .map_err(|e| RunError::json(path, e))?;
    replay(&config, deliveries)
}

pub fn replay(config: &RunConfig, deliveries: Vec<Delivery>) -> Result<RunReport, RunError> {
    let resolved = config.resolve()?;
    let params = resolved.params;
    let mut procs: BTreeMap<usize, Box<dyn Protocol>> = BTreeMap::new();
    for (&index, &id) in &resolved.correct {
        procs.insert(index, correct_protocol(id, params, config.algorithm)?);
    }
    let faulty: BTreeSet<usize> = resolved.faulty.keys().copied().collect();
    let mut trace = TraceLog::new(resolved.correct.clone(), faulty);
    let rounds = deliveries.iter().map(|d| d.round).max().unwrap_or(0);
    let mut by_round: BTreeMap<u32, Vec<Delivery>> = BTreeMap::new();
    for d in deliveries {
        if d.from_index == 0 || d.from_index > params.n || d.to_index == 0 || d.to_index > params.n {
            return Err(RunError::Replay(format!("round {}: index out of range", d.round)));
        }
        by_round.entry(d.round).or_default().push(d);
    }

    let mut metrics = RunMetrics::default();
    for round in 1..=rounds {
        let ds = by_round.remove(&round).unwrap_or_default();
        metrics.messages_delivered += ds.len() as u64;
        for (&index, p) in procs.iter_mut() {
            let sent = p
                .broadcast(round)
                .map_err(|source| crate::error::SimError::Protocol { index, round, source })?;
            let recorded: Vec<&Msg> = ds.iter().filter(|d| d.from_index == index).map(|d| &d.msg).collect();
            let consistent = match &sent {
                Some(m) => recorded.len() == params.n && recorded.iter().all(|r| *r == m),
                None => recorded.is_empty(),
            };
            if !consistent {
                return Err(RunError::Replay(format!(
                    "round {round}: correct process {index} would broadcast {sent:?}, trace records {} deliveries",
                    recorded.len()
                )));
            }
            if let Some(m) = &sent {
                metrics.max_message_ids = metrics.max_message_ids.max(m.id_count());
            }
        }
        for (&index, p) in procs.iter_mut() {
            let inbox = crate::netsim::RoundInbox {
                by_link: ds.iter().filter(|d| d.to_index == index).map(|d| (d.link_label, d.msg.clone())).collect(),
            };
            p.deliver(round, &inbox)
                .map_err(|source| crate::error::SimError::Protocol { index, round, source })?;
            trace.push_snapshot(round, index, p.snapshot());
        }
        trace.push_round(round, ds);
        metrics.rounds_executed = round;
    }

    let mut names = BTreeMap::new();
    for (&index, p) in &procs {
        let name = p.decision().ok_or(crate::error::SimError::Undecided(index))?;
        names.insert(p.my_id(), name);
    }
    let (report, _) = assemble(config, &params, names, metrics, &trace)?;
    Ok(report)
}

/// Integer values given either as an inclusive range or as a list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    Range { from: u64, to: u64 },
    List(Vec<u64>),
}

impl Values {
    pub fn expand(&self) -> Vec<u64> {
        match self {
            Values::Range { from, to } => (*from..=*to).collect(),
            Values::List(v) => v.clone(),
        }
    }
}

impl Default for Values {
    fn default() -> Self {
        Values::List(Vec::new())
    }
}

/// Strategy name used in sweeps for runs with no faulty process.
pub const NO_FAULTS: &str = "none";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default)]
    pub n: Values,
    #[serde(default)]
    pub t: Values,
    /// Defaults to every algorithm.
    #[serde(default)]
    pub algorithms: Option<Vec<Algorithm>>,
    /// Strategy names; defaults to the whole catalog. `"none"` runs fault-free.
    #[serde(default)]
    pub strategies: Option<Vec<String>>,
    #[serde(default)]
    pub seeds: Values,
}

impl SweepGrid {
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| RunError::json(path, e))
    }

    /// All admissible configurations, tagged with their strategy name, plus
    /// one notice per skipped grid point.
    pub fn points(&self) -> Result<(Vec<GridPoint>, Vec<String>), ConfigError> {
        let algorithms = self.algorithms.clone().unwrap_or_else(|| Algorithm::ALL.to_vec());
        let strategies: Vec<String> = self
            .strategies
            .clone()
            .unwrap_or_else(|| Strategy::NAMES.iter().map(|s| s.to_string()).collect());
        for s in &strategies {
            if s != NO_FAULTS && !Strategy::NAMES.contains(&s.as_str()) {
                return Err(ConfigError::UnknownStrategy(s.clone()));
            }
        }
        let mut points = Vec::new();
        let mut skipped = Vec::new();
        for n in self.n.expand() {
            for t in self.t.expand() {
                let (n, t) = (n as usize, t as usize);
                for &algorithm in &algorithms {
                    if n == 0 || !algorithm.admits(n, t) {
                        skipped.push(format!(
                            "skipping N = {n}, t = {t}: {algorithm} requires {}",
                            algorithm.requirement()
                        ));
                        continue;
                    }
                    let params = SystemParams::new(n, t, 10 * (n as u64 + 1))?;
                    let rounds = expected_rounds(&params, algorithm).expect("admitted");
                    for name in &strategies {
                        for seed in self.seeds.expand() {
                            let mut cfg = RunConfig::fault_free(n, t, algorithm, seed);
                            if name != NO_FAULTS {
                                let strategy = Strategy::by_name(name, seed, rounds)?;
                                cfg.faulty = faulty_indices(n, t, seed)
                                    .into_iter()
                                    .map(|index| FaultySpec { index, strategy: strategy.clone() })
                                    .collect();
                            }
                            points.push((name.clone(), cfg));
                        }
                    }
                }
            }
        }
        Ok((points, skipped))
    }
}

pub type GridPoint = (String, RunConfig);

/// `t` distinct indices in `[1, n]`, chosen by `seed`, ascending.
pub fn faulty_indices(n: usize, t: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6661_756c_7479);
    let mut v = (1..=n).choose_multiple(&mut rng, t.min(n));
    v.sort_unstable();
    v
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepRow {
    pub n: usize,
    pub t: usize,
    pub algorithm: Algorithm,
    pub strategy: String,
    pub seed: u64,
    pub rounds: u32,
    pub all_checks_pass: bool,
    pub max_final_spread: Option<Rank>,
    /// Names and witnesses of failing checks, or the run error.
    pub failures: Vec<String>,
}

pub const CSV_HEADER: [&str; 9] = [
    "n",
    "t",
    "algorithm",
    "strategy",
    "seed",
    "rounds",
    "all_checks_pass",
    "max_final_spread_num",
    "max_final_spread_den",
];

impl SweepRow {
    fn record(&self) -> [String; 9] {
        let (num, den) = match &self.max_final_spread {
            Some(r) => (r.numer().to_string(), r.denom().to_string()),
            None => (String::new(), String::new()),
        };
        [
            self.n.to_string(),
            self.t.to_string(),
            self.algorithm.to_string(),
            self.strategy.clone(),
            self.seed.to_string(),
            self.rounds.to_string(),
            self.all_checks_pass.to_string(),
            num,
            den,
        ]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<String>,
}

impl SweepSummary {
    pub fn passed(&self) -> usize {
        self.rows.iter().filter(|r| r.all_checks_pass).count()
    }

    pub fn failed(&self) -> usize {
        self.rows.len() - self.passed()
    }

    pub fn max_final_spread(&self) -> Option<Rank> {
        self.rows.iter().filter_map(|r| r.max_final_spread.clone()).max()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), RunError> {
        let csv_err = |e| RunError::Csv { path: path.to_path_buf(), source: e };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.record()).map_err(csv_err)?;
        }
        w.flush().map_err(|e| RunError::io(path, e))
    }
}

fn sweep_row(strategy: &str, cfg: &RunConfig) -> SweepRow {
    let mut row = SweepRow {
        n: cfg.n,
        t: cfg.t,
        algorithm: cfg.algorithm,
        strategy: strategy.to_string(),
        seed: cfg.seed,
        rounds: 0,
        all_checks_pass: false,
        max_final_spread: None,
        failures: Vec::new(),
    };
    match run(cfg) {
        Ok(report) => {
            row.rounds = report.metrics.rounds_executed;
            row.all_checks_pass = report.all_passed();
            row.max_final_spread = report.max_final_spread.clone();
            row.failures = report
                .failures()
                .map(|c| format!("{}: {}", c.name, c.witness.as_deref().unwrap_or("")))
                .collect();
        }
        Err(e) => row.failures.push(e.to_string()),
    }
    row
}

fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool")
}

/// Runs every admissible grid point, in parallel, rows in grid order.
pub fn sweep(grid: &SweepGrid) -> Result<SweepSummary, RunError> {
    let (points, skipped) = grid.points()?;
    let rows = thread_pool().install(|| points.par_iter().map(|(s, cfg)| sweep_row(s, cfg)).collect());
    Ok(SweepSummary { rows, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_resolution() {
        let cfg = RunConfig::from_json(r#"{"n": 4, "t": 1, "algorithm": "opbr-log"}"#).unwrap();
        let r = cfg.resolve().unwrap();
        assert_eq!(r.params.n_max, 50);
        assert_eq!(r.correct.values().map(|p| p.0).collect::<Vec<_>>(), vec![10, 20, 30, 40]);
    }

    #[test]
    fn faulty_spec_shape() {
        let cfg = RunConfig::from_json(
            r#"{"n": 4, "t": 1, "algorithm": "opbr-log",
                "faulty": [{"index": 2, "strategy": "crash", "params": {"from_round": 3}}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.faulty[0].strategy, Strategy::Crash { from_round: 3 });
        let r = cfg.resolve().unwrap();
        assert_eq!(r.correct.keys().copied().collect::<Vec<_>>(), vec![1, 3, 4]);
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let silent = RunConfig::from_json(
            r#"{"n": 4, "t": 1, "algorithm": "twostep", "faulty": [{"index": 1, "strategy": "silent"}]}"#,
        )
        .unwrap();
        assert_eq!(silent.faulty[0].strategy, Strategy::Silent);
        let bare = RunConfig::from_json(
            r#"{"n": 4, "t": 1, "algorithm": "opbr-log", "faulty": [{"index": 3, "strategy": "collude-inject"}]}"#,
        )
        .unwrap();
        assert_eq!(bare.faulty[0].strategy, Strategy::ColludeInject { fakes: Vec::new() });
        assert!(RunConfig::from_json(
            r#"{"n": 4, "t": 1, "algorithm": "opbr-log", "faulty": [{"index": 3, "strategy": "nope"}]}"#
        )
        .is_err());
    }

    #[test]
    fn config_errors() {
        let bad = RunConfig::fault_free(4, 2, Algorithm::OpbrLog, 0);
        assert!(bad.resolve().unwrap_err().to_string().contains("requires N > 3t"));
        let bad = RunConfig::fault_free(9, 3, Algorithm::OpbrConst, 0);
        assert!(bad.resolve().unwrap_err().to_string().contains("opbr-const requires N > t²+2t"));
        let mut c = RunConfig::fault_free(4, 1, Algorithm::OpbrLog, 0);
        c.correct_ids = Some(vec![ProcId(1), ProcId(1), ProcId(2), ProcId(3)]);
        assert_eq!(c.resolve(), Err(ConfigError::DuplicateCorrectId(ProcId(1))));
        c.correct_ids = Some(vec![ProcId(1)]);
        assert!(matches!(c.resolve(), Err(ConfigError::CorrectIdCount { .. })));
        let two = |i| FaultySpec { index: i, strategy: Strategy::Silent };
        let mut c = RunConfig::fault_free(4, 1, Algorithm::OpbrLog, 0);
        c.faulty = vec![two(1), two(2)];
        assert!(matches!(c.resolve(), Err(ConfigError::TooManyFaulty { .. })));
        c.faulty = vec![two(5)];
        assert!(matches!(c.resolve(), Err(ConfigError::FaultyIndexOutOfRange { .. })));
        assert!(RunConfig::from_json(r#"{"n": 4}"#).is_err());
    }

    #[test]
    fn faulty_indices_are_distinct_and_seeded() {
        let a = faulty_indices(13, 4, 7);
        assert_eq!(a.len(), 4);
        assert_eq!(a, faulty_indices(13, 4, 7));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(a.iter().all(|&i| (1..=13).contains(&i)));
    }

    #[test]
    fn grid_skips_inadmissible_points() {
        let grid: SweepGrid = serde_json::from_str(
            r#"{"n": {"from": 4, "to": 7}, "t": [1, 2], "algorithms": ["opbr-log"],
                "strategies": ["silent"], "seeds": [0, 1]}"#,
        )
        .unwrap();
        let (points, skipped) = grid.points().unwrap();
        // t = 1: N 4..7 admitted; t = 2: only N = 7.
        assert_eq!(points.len(), (4 + 1) * 2);
        assert_eq!(skipped.len(), 3);
        assert!(points.iter().all(|(_, c)| c.faulty.len() == c.t));
        let bad: SweepGrid = serde_json::from_str(r#"{"strategies": ["nope"]}"#).unwrap();
        assert!(bad.points().is_err());
    }

    #[test]
    fn values_forms() {
        assert_eq!(Values::Range { from: 2, to: 4 }.expand(), vec![2, 3, 4]);
        assert_eq!(Values::List(vec![9]).expand(), vec![9]);
        assert!(Values::default().expand().is_empty());
    }
}
