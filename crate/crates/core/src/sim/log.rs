use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::policy::BatchType;
use crate::time::{from_iso, to_iso, Seconds, Timestamp};

/// One executed activity instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub case_id: u32,
    pub activity: String,
    pub resource: String,
    pub enable_time: Timestamp,
    pub start_time: Timestamp,
    pub end_time: Timestamp,
    pub batch_id: u64,
    /// Share of the batch cost allocated to this instance.
    pub cost: f64,
    /// Sampled processing time, excluding calendar pauses.
    pub work: Seconds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchRecord {
    pub batch_id: u64,
    pub activity: String,
    pub resource: String,
    pub batch_type: BatchType,
    /// Instant the activation rule fired (or the flush happened).
    pub ready_time: Timestamp,
    pub start_time: Timestamp,
    pub end_time: Timestamp,
    pub cost: f64,
    /// Indices into [`EventLog::records`], in execution order.
    pub members: Vec<usize>,
}

impl BatchRecord {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub records: Vec<InstanceRecord>,
    pub batches: Vec<BatchRecord>,
}

#[derive(Serialize, Deserialize)]
struct InstanceRow {
    case_id: u32,
    activity: String,
    resource: String,
    enable_time: String,
    start_time: String,
    end_time: String,
    batch_id: u64,
    cost: f64,
}

#[derive(Serialize, Deserialize)]
struct BatchRow {
    batch_id: u64,
    activity: String,
    resource: String,
    batch_type: BatchType,
    size: usize,
    ready_time: String,
    start_time: String,
    end_time: String,
    work_seconds: Seconds,
    cost: f64,
    members: String,
    member_work: String,
}

fn csv_err(e: csv::Error) -> SimError {
    SimError::LogFormat(e.to_string())
}

fn parse_time(s: &str) -> Result<Timestamp, SimError> {
    from_iso(s).ok_or_else(|| SimError::LogFormat(format!("bad timestamp `{s}`")))
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn split<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, SimError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|p| p.parse().map_err(|_| SimError::LogFormat(format!("bad list element `{p}`"))))
        .collect()
}

impl EventLog {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Busy work of a batch: longest member for parallel, sum for sequential.
    pub fn batch_work(&self, b: &BatchRecord) -> Seconds {
        let works = b.members.iter().map(|&m| self.records[m].work);
        match b.batch_type {
            BatchType::Parallel => works.max().unwrap_or(0),
            BatchType::Sequential => works.sum(),
        }
    }

    pub fn batch_min_enable(&self, b: &BatchRecord) -> Timestamp {
        b.members.iter().map(|&m| self.records[m].enable_time).min().unwrap_or(b.ready_time)
    }

    pub fn batches_of<'a>(&'a self, activity: &'a str) -> impl Iterator<Item = &'a BatchRecord> + 'a {
        self.batches.iter().filter(move |b| b.activity == activity)
    }

    /// Record indices grouped by case id.
    pub fn cases(&self) -> BTreeMap<u32, Vec<usize>> {
        let mut out: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            out.entry(r.case_id).or_default().push(i);
        }
        out
    }

    pub fn horizon(&self) -> Timestamp {
        self.batches.iter().map(|b| b.end_time).max().unwrap_or(0)
    }

    /// Structural laws every log produced by the engine satisfies. Returns
    /// human-readable violations; empty means consistent.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = vec![0u32; self.records.len()];
        for (i, r) in self.records.iter().enumerate() {
            if !(r.enable_time <= r.start_time && r.start_time <= r.end_time) {
                out.push(format!("record {i}: times out of order"));
            }
        }
        for b in &self.batches {
            if b.members.is_empty() {
                out.push(format!("batch {}: empty", b.batch_id));
                continue;
            }
            let mut alloc = 0.0;
            for &m in &b.members {
                match seen.get_mut(m) {
                    Some(c) => *c += 1,
                    None => out.push(format!("batch {}: unknown member {m}", b.batch_id)),
                }
                if let Some(r) = self.records.get(m) {
                    alloc += r.cost;
                    if r.batch_id != b.batch_id {
                        out.push(format!("batch {}: member {m} carries batch id {}", b.batch_id, r.batch_id));
                    }
                }
            }
            if (alloc - b.cost).abs() > 1e-9 * b.cost.abs().max(1.0) {
                out.push(format!("batch {}: allocated {alloc} != cost {}", b.batch_id, b.cost));
            }
            let recs: Vec<&InstanceRecord> = b.members.iter().filter_map(|&m| self.records.get(m)).collect();
            match b.batch_type {
                BatchType::Parallel => {
                    if recs.iter().any(|r| r.start_time != b.start_time || r.end_time != b.end_time) {
                        out.push(format!("batch {}: parallel members differ in start/end", b.batch_id));
                    }
                }
                BatchType::Sequential => {
                    if recs[0].start_time != b.start_time || recs[recs.len() - 1].end_time != b.end_time {
                        out.push(format!("batch {}: sequential bounds mismatch", b.batch_id));
                    }
                    for w in recs.windows(2) {
                        if w[1].start_time != w[0].end_time {
                            out.push(format!("batch {}: sequential members not chained", b.batch_id));
                        }
                    }
                }
            }
            if recs.iter().any(|r| r.enable_time > b.ready_time) || b.ready_time > b.start_time {
                out.push(format!("batch {}: ready time inconsistent", b.batch_id));
            }
        }
        for (i, c) in seen.iter().enumerate() {
            if *c != 1 {
                out.push(format!("record {i} appears in {c} batches"));
            }
        }
        out
    }

    pub fn write_instances_csv<W: Write>(&self, w: W) -> Result<(), SimError> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.records {
            wr.serialize(InstanceRow {
                case_id: r.case_id,
                activity: r.activity.clone(),
                resource: r.resource.clone(),
                enable_time: to_iso(r.enable_time),
                start_time: to_iso(r.start_time),
                end_time: to_iso(r.end_time),
                batch_id: r.batch_id,
                cost: r.cost,
            })
            .map_err(csv_err)?;
        }
        if self.records.is_empty() {
            wr.write_record(["case_id", "activity", "resource", "enable_time", "start_time", "end_time", "batch_id", "cost"])
                .map_err(csv_err)?;
        }
        wr.flush().map_err(|e| SimError::LogFormat(e.to_string()))
    }

    pub fn write_batches_csv<W: Write>(&self, w: W) -> Result<(), SimError> {
        let mut wr = csv::Writer::from_writer(w);
        for b in &self.batches {
            wr.serialize(BatchRow {
                batch_id: b.batch_id,
                activity: b.activity.clone(),
                resource: b.resource.clone(),
                batch_type: b.batch_type,
                size: b.size(),
                ready_time: to_iso(b.ready_time),
                start_time: to_iso(b.start_time),
                end_time: to_iso(b.end_time),
                work_seconds: self.batch_work(b),
                cost: b.cost,
                members: join(&b.members),
                member_work: join(b.members.iter().map(|&m| self.records[m].work)),
            })
            .map_err(csv_err)?;
        }
        wr.flush().map_err(|e| SimError::LogFormat(e.to_string()))
    }

    pub fn instances_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_instances_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf8")
    }

    pub fn batches_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_batches_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf8")
    }

    /// Reads a log back from its instance and batch CSV files.
    pub fn read_csv<R1: Read, R2: Read>(instances: R1, batches: R2) -> Result<EventLog, SimError> {
        let mut records = Vec::new();
        for row in csv::Reader::from_reader(instances).deserialize::<InstanceRow>() {
            let row = row.map_err(csv_err)?;
            records.push(InstanceRecord {
                case_id: row.case_id,
                activity: row.activity,
                resource: row.resource,
                enable_time: parse_time(&row.enable_time)?,
                start_time: parse_time(&row.start_time)?,
                end_time: parse_time(&row.end_time)?,
                batch_id: row.batch_id,
                cost: row.cost,
                work: 0,
            });
        }
        let mut out = Vec::new();
        for row in csv::Reader::from_reader(batches).deserialize::<BatchRow>() {
            let row = row.map_err(csv_err)?;
            let members: Vec<usize> = split(&row.members)?;
            let work: Vec<Seconds> = split(&row.member_work)?;
            if members.len() != work.len() || members.len() != row.size {
                return Err(SimError::LogFormat(format!("batch {} member lists disagree", row.batch_id)));
            }
            for (&m, &w) in members.iter().zip(&work) {
                let r = records
                    .get_mut(m)
                    .ok_or_else(|| SimError::LogFormat(format!("batch {} references missing record {m}", row.batch_id)))?;
                r.work = w;
            }
            out.push(BatchRecord {
                batch_id: row.batch_id,
                activity: row.activity,
                resource: row.resource,
                batch_type: row.batch_type,
                ready_time: parse_time(&row.ready_time)?,
                start_time: parse_time(&row.start_time)?,
                end_time: parse_time(&row.end_time)?,
                cost: row.cost,
                members,
            });
        }
        Ok(EventLog { records, batches: out })
    }

    pub fn read_csv_str(instances: &str, batches: &str) -> Result<EventLog, SimError> {
        Self::read_csv(instances.as_bytes(), batches.as_bytes())
    }
}
