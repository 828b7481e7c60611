use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::TraceError;
use crate::opbr::OpbrSnapshot;
use crate::twostep::TwoStepSnapshot;
use crate::types::{LinkLabel, Msg, ProcId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Delivery {
    pub round: u32,
    pub from_index: usize,
    pub to_index: usize,
    /// Label of the link at the receiver.
    pub link_label: LinkLabel,
    pub msg: Msg,
}

#[derive(Serialize, Deserialize)]
struct DeliveryLine {
    round: u32,
    from_index: usize,
    to_index: usize,
    link_label: usize,
    msg_kind: String,
    payload: Value,
}

impl Delivery {
    fn to_line(&self) -> DeliveryLine {
        DeliveryLine {
            round: self.round,
            from_index: self.from_index,
            to_index: self.to_index,
            link_label: self.link_label.0,
            msg_kind: self.msg.kind().to_string(),
            payload: self.msg.payload(),
        }
    }

    fn from_line(line: DeliveryLine) -> Result<Self, TraceError> {
        Ok(Delivery {
            round: line.round,
            from_index: line.from_index,
            to_index: line.to_index,
            link_label: LinkLabel(line.link_label),
            msg: Msg::from_parts(&line.msg_kind, &line.payload)?,
        })
    }
}

/// State of a correct process after the compute phase of a round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Snapshot {
    Opbr(OpbrSnapshot),
    TwoStep(TwoStepSnapshot),
}

impl Snapshot {
    pub fn my_id(&self) -> ProcId {
        match self {
            Snapshot::Opbr(s) => s.my_id,
            Snapshot::TwoStep(s) => s.my_id,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Snapshot::Opbr(_) => "opbr",
            Snapshot::TwoStep(_) => "twostep",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnapshotEntry {
    pub round: u32,
    pub index: usize,
    pub snapshot: Snapshot,
}

/// Every delivered message plus the per-round state of every correct
/// process. Deliveries are ordered by (round, sender index, receiver index).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TraceLog {
    pub correct: BTreeMap<usize, ProcId>,
    pub faulty: BTreeSet<usize>,
    pub deliveries: Vec<Delivery>,
    pub snapshots: Vec<SnapshotEntry>,
}

impl TraceLog {
    pub fn new(correct: BTreeMap<usize, ProcId>, faulty: BTreeSet<usize>) -> Self {
        TraceLog { correct, faulty, deliveries: Vec::new(), snapshots: Vec::new() }
    }

    pub(crate) fn push_round(&mut self, round: u32, deliveries: Vec<Delivery>) {
        self.deliveries
            .extend(deliveries.into_iter().map(|d| Delivery { round, ..d }));
    }

    pub(crate) fn push_snapshot(&mut self, round: u32, index: usize, snapshot: Snapshot) {
        self.snapshots.push(SnapshotEntry { round, index, snapshot });
    }

    pub fn rounds(&self) -> u32 {
        self.snapshots.iter().map(|s| s.round).max().unwrap_or(0)
    }

    pub fn deliveries_in(&self, round: u32) -> impl Iterator<Item = &Delivery> {
        self.deliveries.iter().filter(move |d| d.round == round)
    }

    pub fn snapshot(&self, round: u32, index: usize) -> Option<&Snapshot> {
        self.snapshots
            .iter()
            .find(|s| s.round == round && s.index == index)
            .map(|s| &s.snapshot)
    }

    /// Snapshots of every correct process at `round`, by index.
    pub fn round_snapshots(&self, round: u32) -> BTreeMap<usize, &Snapshot> {
        self.snapshots
            .iter()
            .filter(|s| s.round == round)
            .map(|s| (s.index, &s.snapshot))
            .collect()
    }

    /// Inbox of `index` at `round` as the receiver saw it.
    pub fn inbox(&self, round: u32, index: usize) -> super::RoundInbox {
        super::RoundInbox {
            by_link: self
                .deliveries_in(round)
                .filter(|d| d.to_index == index)
                .map(|d| (d.link_label, d.msg.clone()))
                .collect(),
        }
    }

    /// JSON Lines: `header` first, then one object per delivered message.
    pub fn write_jsonl<W: Write>(&self, header: &Value, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer(&mut w, header)?;
        w.write_all(b"\n")?;
        for d in &self.deliveries {
            serde_json::to_writer(&mut w, &d.to_line())?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self, header: &Value) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(header, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }
}

/// Parses a JSON Lines trace back into its header and deliveries.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<(Value, Vec<Delivery>), TraceError> {
    let mut header = None;
    let mut deliveries = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| TraceError::Line { line: i + 1, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        if header.is_none() {
            let v: Value = serde_json::from_str(&line)
                .map_err(|e| TraceError::Line { line: i + 1, message: e.to_string() })?;
            if v.get("header").is_none() {
                return Err(TraceError::MissingHeader);
            }
            header = Some(v);
            continue;
        }
        let dl: DeliveryLine = serde_json::from_str(&line)
            .map_err(|e| TraceError::Line { line: i + 1, message: e.to_string() })?;
        deliveries.push(Delivery::from_line(dl)?);
    }
    Ok((header.ok_or(TraceError::MissingHeader)?, deliveries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn jsonl_round_trip() {
        let mut log = TraceLog::new(BTreeMap::from([(1, ProcId(10))]), BTreeSet::from([2]));
        log.push_round(
            1,
            vec![
                Delivery {
                    round: 0,
                    from_index: 1,
                    to_index: 2,
                    link_label: LinkLabel(1),
                    msg: Msg::Id(ProcId(10)),
                },
                Delivery {
                    round: 0,
                    from_index: 2,
                    to_index: 1,
                    link_label: LinkLabel(1),
                    msg: Msg::Echo([ProcId(3), ProcId(10)].into_iter().collect()),
                },
            ],
        );
        let text = log.to_jsonl(&json!({"header": {"n": 2}}));
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), r#"{"header":{"n":2}}"#);
        assert_eq!(
            lines.next().unwrap(),
            r#"{"round":1,"from_index":1,"to_index":2,"link_label":1,"msg_kind":"ID","payload":10}"#
        );
        let (header, back) = read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(header["header"]["n"], 2);
        assert_eq!(back, log.deliveries);
    }

    #[test]
    fn missing_header_is_rejected() {
        let line = r#"{"round":1,"from_index":1,"to_index":2,"link_label":1,"msg_kind":"ID","payload":10}"#;
        assert!(matches!(read_jsonl(line.as_bytes()), Err(TraceError::MissingHeader)));
        assert!(matches!(read_jsonl("".as_bytes()), Err(TraceError::MissingHeader)));
    }
}
