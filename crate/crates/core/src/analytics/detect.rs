use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::stats::{compute_stats, percentile, ActivityStats, LogStats, SlotHistogram};
use super::AnalyticsError;
use crate::interventions::window_aligned_waits;
use crate::model::ProcessModel;
use crate::policy::{BatchType, BatchingPolicy, ConditionKind, PolicySet};
use crate::sim::EventLog;
use crate::time::{Seconds, Slot, Timestamp, WEEK};

pub const ALL_SCENARIOS: std::ops::RangeInclusive<u8> = 1..=19;

/// Trigger thresholds of the scenario predicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub enabled_scenarios: BTreeSet<u8>,
    /// S1/S2: percentile of per-activity mean waits to exceed.
    pub wait_percentile: f64,
    /// S3: number of top enablement buckets and their required mass share.
    pub concentration_top_k: usize,
    pub concentration_share: f64,
    /// S5: mean first wait (seconds) above which a size threshold is too large.
    pub wait_threshold: f64,
    /// S6: percentile of per-activity mean processing times to exceed.
    pub processing_percentile: f64,
    /// S6: mean batch size below which a parallel batch is considered small.
    pub size_cap: f64,
    /// S8/S9: share of batches with mid-execution idle time to exceed.
    pub idle_share: f64,
    /// S11/S13/S14: share of total cost.
    pub cost_share: f64,
    /// S12/S14: share of total instances.
    pub freq_share: f64,
    /// S13/S14: cosine similarity of enablement histograms.
    pub similarity: f64,
    pub u_high: f64,
    pub u_low: f64,
    pub switch_high: f64,
    pub switch_low: f64,
    /// S18/S19: batches needed before allocation variability is judged.
    pub min_batches_for_switch: usize,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            enabled_scenarios: ALL_SCENARIOS.collect(),
            wait_percentile: 0.75,
            concentration_top_k: 3,
            concentration_share: 0.5,
            wait_threshold: 3600.0,
            processing_percentile: 0.75,
            size_cap: 10.0,
            idle_share: 0.2,
            cost_share: 0.3,
            freq_share: 0.3,
            similarity: 0.8,
            u_high: 0.8,
            u_low: 0.3,
            switch_high: 0.5,
            switch_low: 0.2,
            min_batches_for_switch: 2,
        }
    }
}

/// What an intervention needs to act on a detected scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Evidence {
    /// Per-batch longest and shortest member waits at batch start.
    Waits { per_batch_max: Vec<Seconds>, per_batch_min: Vec<Seconds>, observed: f64, bound: f64 },
    /// Candidate schedule buckets with their weights.
    Histogram { buckets: Vec<(Slot, u64)> },
    /// Busiest enablement and execution buckets of an activity.
    Peaks { enablement: Vec<(Slot, u64)>, execution: Vec<(Slot, u64)> },
    /// Observed batch sizes and the current size threshold, if any.
    Sizes { sizes: Vec<usize>, current_threshold: Option<u32> },
    /// Starts of availability windows long enough for a batch, with their
    /// lengths, and slots from which a batch fits before the resource closes.
    Windows { starts: Vec<(Slot, Seconds)>, fitting: Vec<(Slot, u64)> },
    /// Per-batch waits of the first and last member had the batch started at
    /// the nearest suitable availability window.
    AlignedWaits { first: Vec<Seconds>, last: Vec<Seconds> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScenarioInstance {
    pub scenario: u8,
    pub activity_id: String,
    pub evidence: Evidence,
}

pub fn detect_scenarios(
    log: &EventLog,
    model: &ProcessModel,
    policies: &PolicySet,
    config: &DetectionConfig,
) -> Result<Vec<ScenarioInstance>, AnalyticsError> {
    let stats = compute_stats(log, model)?;
    Ok(detect_with_stats(&stats, log, model, policies, config))
}

fn size_threshold(p: Option<&BatchingPolicy>) -> Option<u32> {
    let p = p?;
    p.rule.locate(ConditionKind::Size).first().and_then(|&l| p.rule.get(l)).and_then(|c| c.threshold()).map(|t| t as u32)
}

fn sizes_evidence(a: &ActivityStats, p: Option<&BatchingPolicy>) -> Evidence {
    Evidence::Sizes { sizes: a.batch_sizes.clone(), current_threshold: size_threshold(p) }
}

/// Deterministic detection over precomputed statistics. Emits at most one
/// instance per (scenario, activity), ordered by scenario then activity.
pub fn detect_with_stats(
    stats: &LogStats,
    log: &EventLog,
    model: &ProcessModel,
    policies: &PolicySet,
    cfg: &DetectionConfig,
) -> Vec<ScenarioInstance> {
    let executed: Vec<&ActivityStats> = stats.activities.iter().filter(|a| a.batch_count > 0).collect();
    let first_waits: Vec<f64> = executed.iter().map(|a| a.mean_first_wait).collect();
    let last_waits: Vec<f64> = executed.iter().map(|a| a.mean_last_wait).collect();
    let proc_times: Vec<f64> = executed.iter().map(|a| a.mean_processing_time).collect();
    let p_first = percentile(&first_waits, cfg.wait_percentile);
    let p_last = percentile(&last_waits, cfg.wait_percentile);
    let p_proc = percentile(&proc_times, cfg.processing_percentile);
    let total_cost = stats.total_cost;
    let total_n = stats.total_instances.max(1) as f64;

    let mut out: Vec<ScenarioInstance> = Vec::new();
    for a in &executed {
        let id = a.activity_id.as_str();
        let policy = policies.get(id);
        let batched = policy.is_some();
        let has_size = policy.is_some_and(|p| p.rule.has(ConditionKind::Size));
        let cost_share = if total_cost > 0.0 { a.total_cost / total_cost } else { 0.0 };
        let freq_share = a.execution_count as f64 / total_n;
        let eligible: Vec<&str> =
            model.activity(id).map(|m| m.eligible_resources.iter().map(String::as_str).collect()).unwrap_or_default();
        let utils: Vec<f64> = eligible.iter().filter_map(|r| stats.resource(r)).map(|r| r.utilization).collect();
        let similar = stats.activities.iter().any(|o| {
            o.activity_id != a.activity_id
                && o.execution_count > 0
                && a.enablement_histogram.cosine(&o.enablement_histogram) > cfg.similarity
        });
        let idle_frac = a.idle_batches as f64 / a.batch_count as f64;
        let alloc = stats.allocation_of(id);
        let mut emit = |scenario: u8, evidence: Evidence| {
            if cfg.enabled_scenarios.contains(&scenario) {
                out.push(ScenarioInstance { scenario, activity_id: id.to_string(), evidence });
            }
        };
        let waits = |observed: f64, bound: f64| Evidence::Waits {
            per_batch_max: a.per_batch_max_waits.clone(),
            per_batch_min: a.per_batch_min_waits.clone(),
            observed,
            bound,
        };

        if batched && a.mean_first_wait > p_first {
            emit(1, waits(a.mean_first_wait, p_first));
        }
        if batched && a.mean_last_wait > p_last {
            emit(2, waits(a.mean_last_wait, p_last));
        }
        // S3: enablement concentrated in a few slots that the rule does not schedule.
        let top = a.enablement_histogram.top_k(cfg.concentration_top_k);
        let top_mass: u64 = top.iter().map(|(_, c)| c).sum();
        let total_mass = a.enablement_histogram.total();
        if total_mass > 0 && top_mass as f64 / total_mass as f64 >= cfg.concentration_share {
            let scheduled = policy.is_some_and(|p| top.iter().all(|(s, _)| p.rule.schedules(*s)));
            if !scheduled {
                emit(3, Evidence::Peaks { enablement: top.clone(), execution: a.execution_histogram.top_k(cfg.concentration_top_k) });
            }
        }
        // S4: batches started while fewer eligible resources than usual were available.
        let mut avail = SlotHistogram::default();
        for r in eligible.iter().filter_map(|r| stats.resource(r)) {
            for (s, c) in r.availability_histogram.nonzero() {
                avail.add(s, c);
            }
        }
        let nonzero: Vec<f64> = avail.nonzero().iter().map(|&(_, c)| c as f64).collect();
        let median = percentile(&nonzero, 0.5);
        if a.batch_start_slots.iter().any(|&s| (avail.get(s) as f64) < median) {
            emit(4, Evidence::Histogram { buckets: avail.nonzero() });
        }
        if has_size && a.mean_first_wait > cfg.wait_threshold {
            emit(5, sizes_evidence(a, policy));
        }
        if policy.is_some_and(|p| p.batch_type == BatchType::Parallel)
            && a.mean_processing_time > p_proc
            && a.mean_batch_size < cfg.size_cap
        {
            emit(6, sizes_evidence(a, policy));
        }
        if policy.is_some_and(|p| p.batch_type == BatchType::Sequential) && a.mean_batch_size > 1.0 {
            emit(7, sizes_evidence(a, policy));
        }
        if batched && idle_frac > cfg.idle_share {
            emit(8, window_evidence(a, log, model, id));
            match window_aligned_waits(log, model, id) {
                Ok((first, last)) => emit(9, Evidence::AlignedWaits { first, last }),
                Err(e) => log::debug!("scenario 9 skipped for {id}: {e}"),
            }
        }
        if let Some(p) = policy {
            let sizes: BTreeSet<usize> = a.batch_sizes.iter().copied().collect();
            if !p.cost.variable.is_empty()
                && sizes.iter().any(|&s| p.cost.variable_cost(2 * s) < 2.0 * p.cost.variable_cost(s))
            {
                emit(10, sizes_evidence(a, policy));
            }
        }
        if cost_share > cfg.cost_share {
            emit(11, sizes_evidence(a, policy));
        }
        if freq_share > cfg.freq_share {
            emit(12, sizes_evidence(a, policy));
        }
        if cost_share < cfg.cost_share && similar {
            emit(13, sizes_evidence(a, policy));
        }
        if batched && cost_share < cfg.cost_share && freq_share < cfg.freq_share && !similar {
            emit(14, sizes_evidence(a, policy));
        }
        if batched && cost_non_decreasing(&a.batch_costs) {
            emit(15, sizes_evidence(a, policy));
        }
        if batched && utils.iter().any(|&u| u > cfg.u_high) {
            emit(16, sizes_evidence(a, policy));
        }
        if !utils.is_empty() && utils.iter().all(|&u| u < cfg.u_low) {
            emit(17, sizes_evidence(a, policy));
        }
        if let Some(v) = alloc.filter(|v| v.batch_count >= cfg.min_batches_for_switch) {
            if v.switch_rate > cfg.switch_high {
                emit(18, sizes_evidence(a, policy));
            }
            if has_size && v.switch_rate < cfg.switch_low {
                emit(19, sizes_evidence(a, policy));
            }
        }
    }
    let order: BTreeMap<&str, usize> = model.activities.iter().enumerate().map(|(i, a)| (a.id.as_str(), i)).collect();
    out.sort_by_key(|s| (s.scenario, order.get(s.activity_id.as_str()).copied().unwrap_or(usize::MAX)));
    out
}

/// Mean cost per instance by batch size never decreases as size grows; needs
/// at least two distinct sizes.
fn cost_non_decreasing(batch_costs: &[(usize, f64)]) -> bool {
    let mut by_size: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for &(n, c) in batch_costs {
        let e = by_size.entry(n).or_insert((0.0, 0));
        e.0 += c / n as f64;
        e.1 += 1;
    }
    if by_size.len() < 2 {
        return false;
    }
    let means: Vec<f64> = by_size.values().map(|(s, k)| s / *k as f64).collect();
    means.windows(2).all(|w| w[1] >= w[0] - 1e-12)
}

fn window_evidence(a: &ActivityStats, log: &EventLog, model: &ProcessModel, id: &str) -> Evidence {
    let est = a.mean_batch_work.ceil() as Seconds;
    let resources = model.eligible_resources(id);
    let mut starts: Vec<(Slot, Seconds)> = Vec::new();
    for r in &resources {
        for (off, len) in r.calendar.weekly_windows() {
            if len >= est {
                starts.push((Slot::of(off), len));
            }
        }
    }
    starts.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    starts.dedup_by_key(|s| s.0);
    let mut ready = SlotHistogram::default();
    for b in log.batches_of(id) {
        ready.add(Slot::of(b.ready_time), 1);
    }
    let mut fitting = Vec::new();
    for i in 0..168 {
        let slot = Slot::from_ordinal(i);
        let t: Timestamp = WEEK + slot.week_offset();
        let fits = resources.iter().any(|r| {
            r.calendar.windows_from(t).next().is_some_and(|(s, e)| s <= t && e - t >= est.max(1))
        });
        if fits {
            fitting.push((slot, 1 + ready.get(slot)));
        }
    }
    Evidence::Windows { starts, fitting }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::single_activity_model;
    use crate::policy::{ActivationRule, Condition, CostModel};
    use crate::sim::{simulate, SimConfig};

    fn policy(t: BatchType, theta: u32) -> PolicySet {
        PolicySet::from_policies([BatchingPolicy {
            activity_id: "A".into(),
            batch_type: t,
            rule: ActivationRule::single(Condition::Size { threshold: theta }),
            cost: CostModel::default(),
        }])
    }

    fn ids(v: &[ScenarioInstance]) -> Vec<u8> {
        v.iter().map(|s| s.scenario).collect()
    }

    #[test]
    fn sequential_batching_triggers_s7() {
        let m = single_activity_model(6);
        let p = policy(BatchType::Sequential, 3);
        let out = simulate(&m, &p, &SimConfig::default()).unwrap();
        let found = detect_scenarios(&out.log, &m, &p, &DetectionConfig::default()).unwrap();
        assert!(ids(&found).contains(&7));
    }

    #[test]
    fn unbatched_has_no_wait_scenarios() {
        let m = single_activity_model(6);
        let p = PolicySet::new();
        let out = simulate(&m, &p, &SimConfig::default()).unwrap();
        let found = detect_scenarios(&out.log, &m, &p, &DetectionConfig::default()).unwrap();
        for s in [1, 2, 5] {
            assert!(!ids(&found).contains(&s));
        }
    }

    #[test]
    fn busy_resource_triggers_s16() {
        // Arrivals every hour, each needing 54 minutes: 90% utilization.
        let mut m = single_activity_model(20);
        m.activities[0].duration = crate::model::DurationDistribution::fixed(54 * 60);
        let p = policy(BatchType::Sequential, 1);
        let out = simulate(&m, &p, &SimConfig::default()).unwrap();
        let st = compute_stats(&out.log, &m).unwrap();
        let u = st.resource("r1").unwrap().utilization;
        // Horizon is 19h + 54m; busy 20 * 54m.
        let expected = (20.0 * 54.0) / (19.0 * 60.0 + 54.0);
        assert!((u - expected).abs() < 1e-12, "{u}");
        let found = detect_scenarios(&out.log, &m, &p, &DetectionConfig::default()).unwrap();
        assert!(ids(&found).contains(&16));
        let strict = DetectionConfig { u_high: 0.95, ..Default::default() };
        assert!(!ids(&detect_scenarios(&out.log, &m, &p, &strict).unwrap()).contains(&16));
    }

    #[test]
    fn disabled_scenarios_are_skipped() {
        let m = single_activity_model(6);
        let p = policy(BatchType::Sequential, 3);
        let out = simulate(&m, &p, &SimConfig::default()).unwrap();
        let cfg = DetectionConfig { enabled_scenarios: [12].into_iter().collect(), ..Default::default() };
        assert_eq!(ids(&detect_scenarios(&out.log, &m, &p, &cfg).unwrap()), vec![12]);
    }

    #[test]
    fn cost_trend() {
        assert!(cost_non_decreasing(&[(1, 1.0), (2, 2.0)]));
        assert!(!cost_non_decreasing(&[(1, 1.0), (2, 1.0)]));
        assert!(!cost_non_decreasing(&[(2, 1.0), (2, 3.0)]));
    }
}
