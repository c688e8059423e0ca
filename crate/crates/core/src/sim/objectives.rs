use serde::{Deserialize, Serialize};

use super::{EventLog, SimError};
use crate::time::Seconds;

/// Which part of a batch's elapsed time counts toward cycle time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CycleTimeMode {
    #[default]
    Full,
    /// Subtract the batch's processing work, keeping waiting and idle time.
    WaitingAndIdleOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ObjectiveValues {
    /// Seconds per instance.
    pub avg_cycle_time: f64,
    pub avg_cost: f64,
    /// Seconds.
    pub raw_f1: f64,
    pub raw_f2: f64,
    pub instances: u64,
}

impl ObjectiveValues {
    pub fn point(&self) -> (f64, f64) {
        (self.avg_cycle_time, self.avg_cost)
    }
}

/// Sum over batches of completion minus earliest member enablement, sum of
/// batch costs, and the instance count, with their per-instance averages.
pub fn evaluate_objectives(log: &EventLog) -> Result<ObjectiveValues, SimError> {
    evaluate_objectives_with(log, 0, CycleTimeMode::Full)
}

/// As [`evaluate_objectives`], ignoring instances of cases with id below
/// `warmup`. Batches are restricted to their remaining members.
pub fn evaluate_objectives_with(log: &EventLog, warmup: u32, mode: CycleTimeMode) -> Result<ObjectiveValues, SimError> {
    if log.is_empty() {
        return Err(SimError::EmptyLog);
    }
    let mut f1: i64 = 0;
    let mut f2 = 0.0;
    let mut d: u64 = 0;
    for b in &log.batches {
        let kept: Vec<usize> = b.members.iter().copied().filter(|&m| log.records[m].case_id >= warmup).collect();
        if kept.is_empty() {
            continue;
        }
        let min_enable = kept.iter().map(|&m| log.records[m].enable_time).min().expect("non-empty");
        let mut term: Seconds = b.end_time - min_enable;
        if mode == CycleTimeMode::WaitingAndIdleOnly {
            term -= log.batch_work(b);
        }
        f1 += term;
        f2 += if kept.len() == b.members.len() { b.cost } else { kept.iter().map(|&m| log.records[m].cost).sum() };
        d += kept.len() as u64;
    }
    if d == 0 {
        return Err(SimError::EmptyLog);
    }
    Ok(ObjectiveValues {
        avg_cycle_time: f1 as f64 / d as f64,
        avg_cost: f2 / d as f64,
        raw_f1: f1 as f64,
        raw_f2: f2,
        instances: d,
    })
}

/// Latest completion minus earliest start over the case's instances.
pub fn case_cycle_time(log: &EventLog, case_id: u32) -> Result<Seconds, SimError> {
    let mut lo = None;
    let mut hi = None;
    for r in log.records.iter().filter(|r| r.case_id == case_id) {
        lo = Some(lo.map_or(r.start_time, |v: i64| v.min(r.start_time)));
        hi = Some(hi.map_or(r.end_time, |v: i64| v.max(r.end_time)));
    }
    match (lo, hi) {
        (Some(a), Some(b)) => Ok(b - a),
        _ => Err(SimError::UnknownCase(case_id)),
    }
}

/// Mean case cycle time over cases with id `>= warmup`, in seconds.
pub fn mean_case_cycle_time(log: &EventLog, warmup: u32) -> Result<f64, SimError> {
    let cases = log.cases();
    let mut sum = 0i64;
    let mut n = 0u64;
    for (case, idx) in cases {
        if case < warmup {
            continue;
        }
        let lo = idx.iter().map(|&i| log.records[i].start_time).min().expect("non-empty");
        let hi = idx.iter().map(|&i| log.records[i].end_time).max().expect("non-empty");
        sum += hi - lo;
        n += 1;
    }
    if n == 0 {
        return Err(SimError::EmptyLog);
    }
    Ok(sum as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::BatchType;
    use crate::sim::{BatchRecord, InstanceRecord};
    use crate::time::HOUR;

    fn rec(case_id: u32, e: i64, s: i64, c: i64, batch_id: u64, cost: f64) -> InstanceRecord {
        InstanceRecord {
            case_id,
            activity: "A".into(),
            resource: "r".into(),
            enable_time: e,
            start_time: s,
            end_time: c,
            batch_id,
            cost,
            work: c - s,
        }
    }

    fn batch(batch_id: u64, members: Vec<usize>, s: i64, c: i64, cost: f64) -> BatchRecord {
        BatchRecord {
            batch_id,
            activity: "A".into(),
            resource: "r".into(),
            batch_type: BatchType::Parallel,
            ready_time: s,
            start_time: s,
            end_time: c,
            cost,
            members,
        }
    }

    #[test]
    fn single_batch() {
        let log = EventLog { records: vec![rec(0, 0, HOUR, 2 * HOUR, 0, 5.0)], batches: vec![batch(0, vec![0], HOUR, 2 * HOUR, 5.0)] };
        let o = evaluate_objectives(&log).unwrap();
        assert_eq!(o.point(), (2.0 * HOUR as f64, 5.0));
    }

    #[test]
    fn empty_log_rejected() {
        assert!(matches!(evaluate_objectives(&EventLog::default()), Err(SimError::EmptyLog)));
    }

    #[test]
    fn doubling_costs_doubles_avg_cost() {
        let mut log = EventLog {
            records: vec![rec(0, 0, 0, HOUR, 0, 1.0), rec(1, 0, 0, HOUR, 0, 2.0)],
            batches: vec![batch(0, vec![0, 1], 0, HOUR, 3.0)],
        };
        let a = evaluate_objectives(&log).unwrap();
        log.batches[0].cost *= 2.0;
        for r in &mut log.records {
            r.cost *= 2.0;
        }
        let b = evaluate_objectives(&log).unwrap();
        assert_eq!(b.avg_cost, 2.0 * a.avg_cost);
        assert_eq!(b.avg_cycle_time, a.avg_cycle_time);
    }

    #[test]
    fn case_cycle_time_examples() {
        let log = EventLog {
            records: vec![rec(7, 0, 0, HOUR, 0, 0.0), rec(7, 2 * HOUR, 2 * HOUR, 5 * HOUR, 1, 0.0), rec(8, 0, HOUR, 3 * HOUR, 2, 0.0)],
            batches: vec![],
        };
        assert_eq!(case_cycle_time(&log, 7).unwrap(), 5 * HOUR);
        assert_eq!(case_cycle_time(&log, 8).unwrap(), 2 * HOUR);
        assert!(case_cycle_time(&log, 9).is_err());
        let mut rev = log.clone();
        rev.records.reverse();
        assert_eq!(case_cycle_time(&rev, 7).unwrap(), 5 * HOUR);
    }

    #[test]
    fn warmup_and_processing_exclusion() {
        let log = EventLog {
            records: vec![rec(0, 0, 0, HOUR, 0, 1.0), rec(1, 0, HOUR, 2 * HOUR, 1, 4.0)],
            batches: vec![batch(0, vec![0], 0, HOUR, 1.0), batch(1, vec![1], HOUR, 2 * HOUR, 4.0)],
        };
        let o = evaluate_objectives_with(&log, 1, CycleTimeMode::Full).unwrap();
        assert_eq!((o.raw_f1, o.raw_f2, o.instances), (2.0 * HOUR as f64, 4.0, 1));
        let w = evaluate_objectives_with(&log, 0, CycleTimeMode::WaitingAndIdleOnly).unwrap();
        assert_eq!(w.raw_f1, HOUR as f64);
    }
}
