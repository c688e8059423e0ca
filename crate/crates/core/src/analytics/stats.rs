use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::model::ProcessModel;
use crate::sim::EventLog;
use crate::time::{Seconds, Slot};

const SLOTS: usize = 168;

/// Counts per (weekday, hour) bucket of the weekly cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlotHistogram {
    counts: Vec<u64>,
}

impl Default for SlotHistogram {
    fn default() -> Self {
        SlotHistogram { counts: vec![0; SLOTS] }
    }
}

impl SlotHistogram {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Slot, u64)>) -> Self {
        let mut h = Self::default();
        for (s, c) in pairs {
            h.add(s, c);
        }
        h
    }

    pub fn add(&mut self, slot: Slot, n: u64) {
        self.counts[slot.ordinal()] += n;
    }

    pub fn get(&self, slot: Slot) -> u64 {
        self.counts[slot.ordinal()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Non-zero buckets in slot order.
    pub fn nonzero(&self) -> Vec<(Slot, u64)> {
        (0..SLOTS).filter(|&i| self.counts[i] > 0).map(|i| (Slot::from_ordinal(i), self.counts[i])).collect()
    }

    /// Up to `k` non-zero buckets by count descending, ties by slot ascending.
    pub fn top_k(&self, k: usize) -> Vec<(Slot, u64)> {
        let mut v = self.nonzero();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v.truncate(k);
        v
    }

    pub fn cosine(&self, other: &SlotHistogram) -> f64 {
        let dot: f64 = self.counts.iter().zip(&other.counts).map(|(&a, &b)| a as f64 * b as f64).sum();
        let na: f64 = self.counts.iter().map(|&a| (a as f64).powi(2)).sum::<f64>().sqrt();
        let nb: f64 = other.counts.iter().map(|&b| (b as f64).powi(2)).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ActivityStats {
    pub activity_id: String,
    pub execution_count: u64,
    pub batch_count: u64,
    pub mean_processing_time: f64,
    /// Mean over batches of the longest member wait at batch start.
    pub mean_first_wait: f64,
    /// Mean over batches of the shortest member wait at batch start.
    pub mean_last_wait: f64,
    pub mean_batch_size: f64,
    /// Mean busy work per batch.
    pub mean_batch_work: f64,
    pub total_waiting: Seconds,
    pub total_cost: f64,
    /// Batches whose resource paused mid-execution.
    pub idle_batches: u64,
    pub enablement_histogram: SlotHistogram,
    pub execution_histogram: SlotHistogram,
    pub per_batch_max_waits: Vec<Seconds>,
    pub per_batch_min_waits: Vec<Seconds>,
    pub batch_sizes: Vec<usize>,
    /// `(batch size, batch cost)` per batch.
    pub batch_costs: Vec<(usize, f64)>,
    /// Slot of each batch start.
    pub batch_start_slots: Vec<Slot>,
    pub resources_used: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResourceStats {
    pub resource_id: String,
    pub utilization: f64,
    pub busy: Seconds,
    pub available: Seconds,
    /// 1 in every slot during which the resource's calendar is open.
    pub availability_histogram: SlotHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AllocationVariability {
    pub activity_id: String,
    pub distinct_resource_count: usize,
    /// Fraction of consecutive batch pairs served by different resources.
    pub switch_rate: f64,
    pub batch_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogStats {
    pub activities: Vec<ActivityStats>,
    pub resources: Vec<ResourceStats>,
    pub allocation: Vec<AllocationVariability>,
    pub total_cost: f64,
    pub total_instances: u64,
}

impl LogStats {
    pub fn activity(&self, id: &str) -> Option<&ActivityStats> {
        self.activities.iter().find(|a| a.activity_id == id)
    }

    pub fn resource(&self, id: &str) -> Option<&ResourceStats> {
        self.resources.iter().find(|r| r.resource_id == id)
    }

    pub fn allocation_of(&self, id: &str) -> Option<&AllocationVariability> {
        self.allocation.iter().find(|a| a.activity_id == id)
    }
}

fn mean<T: Copy + Into<f64>>(xs: impl IntoIterator<Item = T>) -> f64 {
    let mut n = 0usize;
    let mut s = 0.0;
    for x in xs {
        s += x.into();
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Per-activity, per-resource and allocation statistics of a log.
pub fn compute_stats(log: &EventLog, model: &ProcessModel) -> Result<LogStats, AnalyticsError> {
    if log.is_empty() {
        return Err(AnalyticsError::EmptyLog);
    }
    let mut activities = Vec::new();
    let mut allocation = Vec::new();
    for a in &model.activities {
        let recs: Vec<_> = log.records.iter().filter(|r| r.activity == a.id).collect();
        let batches: Vec<_> = log.batches_of(&a.id).collect();
        let mut st = ActivityStats {
            activity_id: a.id.clone(),
            execution_count: recs.len() as u64,
            batch_count: batches.len() as u64,
            mean_processing_time: mean(recs.iter().map(|r| r.work as f64)),
            mean_first_wait: 0.0,
            mean_last_wait: 0.0,
            mean_batch_size: mean(batches.iter().map(|b| b.size() as f64)),
            mean_batch_work: mean(batches.iter().map(|b| log.batch_work(b) as f64)),
            total_waiting: recs.iter().map(|r| r.start_time - r.enable_time).sum(),
            total_cost: recs.iter().map(|r| r.cost).sum(),
            idle_batches: 0,
            enablement_histogram: SlotHistogram::default(),
            execution_histogram: SlotHistogram::default(),
            per_batch_max_waits: Vec::new(),
            per_batch_min_waits: Vec::new(),
            batch_sizes: Vec::new(),
            batch_costs: Vec::new(),
            batch_start_slots: Vec::new(),
            resources_used: Vec::new(),
        };
        for r in &recs {
            st.enablement_histogram.add(Slot::of(r.enable_time), 1);
            st.execution_histogram.add(Slot::of(r.start_time), 1);
        }
        let mut used = BTreeSet::new();
        for b in &batches {
            let enables = b.members.iter().map(|&m| log.records[m].enable_time);
            let first = enables.clone().min().expect("non-empty batch");
            let last = enables.max().expect("non-empty batch");
            st.per_batch_max_waits.push(b.start_time - first);
            st.per_batch_min_waits.push(b.start_time - last);
            st.batch_sizes.push(b.size());
            st.batch_costs.push((b.size(), b.cost));
            st.batch_start_slots.push(Slot::of(b.start_time));
            if b.end_time - b.start_time > log.batch_work(b) {
                st.idle_batches += 1;
            }
            used.insert(b.resource.clone());
        }
        st.mean_first_wait = mean(st.per_batch_max_waits.iter().map(|&w| w as f64));
        st.mean_last_wait = mean(st.per_batch_min_waits.iter().map(|&w| w as f64));
        st.resources_used = used.iter().cloned().collect();
        let switches = batches.windows(2).filter(|w| w[0].resource != w[1].resource).count();
        allocation.push(AllocationVariability {
            activity_id: a.id.clone(),
            distinct_resource_count: used.len(),
            switch_rate: if batches.len() < 2 { 0.0 } else { switches as f64 / (batches.len() - 1) as f64 },
            batch_count: batches.len(),
        });
        activities.push(st);
    }
    let horizon = log.horizon();
    let resources = model
        .resources
        .iter()
        .map(|r| {
            let busy: Seconds = log.batches.iter().filter(|b| b.resource == r.id).map(|b| log.batch_work(b)).sum();
            let available = r.calendar.open_seconds(0, horizon);
            let mut hist = SlotHistogram::default();
            for i in 0..SLOTS {
                let slot = Slot::from_ordinal(i);
                if r.calendar.open_in_slot(slot) {
                    hist.add(slot, 1);
                }
            }
            ResourceStats {
                resource_id: r.id.clone(),
                utilization: if available > 0 { (busy as f64 / available as f64).min(1.0) } else { 0.0 },
                busy,
                available,
                availability_histogram: hist,
            }
        })
        .collect();
    Ok(LogStats {
        activities,
        resources,
        allocation,
        total_cost: log.records.iter().map(|r| r.cost).sum(),
        total_instances: log.records.len() as u64,
    })
}

/// Linear-interpolation percentile, `p` in [0, 1]. Empty input gives 0.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::single_activity_model;
    use crate::model::Calendar;
    use crate::policy::BatchType;
    use crate::sim::{BatchRecord, InstanceRecord};
    use crate::time::{Weekday, HOUR, MINUTE};

    fn rec(case_id: u32, e: i64, s: i64, c: i64) -> InstanceRecord {
        InstanceRecord {
            case_id,
            activity: "A".into(),
            resource: "r1".into(),
            enable_time: e,
            start_time: s,
            end_time: c,
            batch_id: 0,
            cost: 1.0,
            work: c - s,
        }
    }

    fn one_batch(start: i64, enables: &[i64]) -> EventLog {
        let records: Vec<_> = enables.iter().enumerate().map(|(i, &e)| rec(i as u32, e, start, start + HOUR)).collect();
        EventLog {
            batches: vec![BatchRecord {
                batch_id: 0,
                activity: "A".into(),
                resource: "r1".into(),
                batch_type: BatchType::Parallel,
                ready_time: start,
                start_time: start,
                end_time: start + HOUR,
                cost: records.len() as f64,
                members: (0..records.len()).collect(),
            }],
            records,
        }
    }

    #[test]
    fn waits_of_one_batch() {
        let start = 8 * HOUR + 10 * MINUTE;
        let log = one_batch(start, &[start - 5 * HOUR, start - 3 * HOUR, start - HOUR]);
        let st = compute_stats(&log, &single_activity_model(3)).unwrap();
        let a = st.activity("A").unwrap();
        assert_eq!(a.mean_first_wait, 5.0 * HOUR as f64);
        assert_eq!(a.mean_last_wait, HOUR as f64);
        assert_eq!(a.mean_batch_size, 3.0);
        assert_eq!(a.execution_histogram.nonzero(), vec![(Slot::new(Weekday::Mon, 8), 3)]);
        assert_eq!(a.enablement_histogram.total(), 3);
    }

    #[test]
    fn utilization_half() {
        let mut m = single_activity_model(2);
        m.resources[0].calendar = Calendar::daily(&[Weekday::Mon], 8 * HOUR, 16 * HOUR);
        // Busy 08:00-12:00, then a zero-work batch stretches the horizon to 16:00.
        let mut log = one_batch(8 * HOUR, &[8 * HOUR]);
        log.records[0].end_time = 12 * HOUR;
        log.records[0].work = 4 * HOUR;
        log.batches[0].end_time = 12 * HOUR;
        let mut idle = rec(1, 12 * HOUR, 12 * HOUR, 16 * HOUR);
        idle.work = 0;
        log.records.push(idle);
        log.batches.push(BatchRecord {
            batch_id: 1,
            members: vec![1],
            ready_time: 12 * HOUR,
            start_time: 12 * HOUR,
            end_time: 16 * HOUR,
            ..log.batches[0].clone()
        });
        let st = compute_stats(&log, &m).unwrap();
        let r = st.resource("r1").unwrap();
        assert_eq!((r.busy, r.available), (4 * HOUR, 8 * HOUR));
        assert_eq!(r.utilization, 0.5);
    }

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.75), 4.0);
        assert_eq!(percentile(&[0.0, 10.0], 0.75), 7.5);
        assert_eq!(percentile(&[], 0.5), 0.0);
    }

    #[test]
    fn top_k_ties() {
        let h = SlotHistogram::from_pairs([(Slot::new(Weekday::Tue, 9), 2), (Slot::new(Weekday::Mon, 8), 2), (Slot::new(Weekday::Sun, 1), 1)]);
        assert_eq!(h.top_k(1), vec![(Slot::new(Weekday::Mon, 8), 2)]);
        assert_eq!(h.top_k(5).len(), 3);
    }
}
