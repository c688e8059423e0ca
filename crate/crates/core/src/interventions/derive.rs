use super::formulas::{build_schedule_set, compute_wt_first_threshold, compute_wt_last_threshold, round_half_up, scale_size_threshold};
use super::{DeltaChange, GroupTarget, InterventionConfig, InterventionError, PolicyDelta, Provenance};
use crate::analytics::{Evidence, ScenarioInstance, SlotHistogram};
use crate::policy::{BatchType, Condition, ConditionKind, PolicySet};

/// Which way a size-scaling scenario moves the size threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeDirection {
    Reduce,
    Grow,
}

/// `Some` for the scenarios whose remedy rescales the size threshold.
pub fn scenario_direction(scenario: u8) -> Option<SizeDirection> {
    match scenario {
        5 | 7 | 14 | 15 | 16 | 19 => Some(SizeDirection::Reduce),
        6 | 10 | 11 | 12 | 13 | 17 | 18 => Some(SizeDirection::Grow),
        _ => None,
    }
}

fn requires_policy(scenario: u8) -> bool {
    matches!(scenario, 1 | 2 | 5 | 7 | 8 | 9 | 14 | 15 | 16 | 19)
}

/// Candidate policy edits for one detected scenario, one per applicable
/// lambda (or per schedule candidate). Deltas that would leave the policy
/// unchanged are dropped; the result may be empty.
pub fn derive_interventions(
    instance: &ScenarioInstance,
    policies: &PolicySet,
    config: &InterventionConfig,
) -> Result<Vec<PolicyDelta>, InterventionError> {
    let sc = instance.scenario;
    let act = &instance.activity_id;
    let mismatch = |reason: &str| InterventionError::Mismatch { scenario: sc, activity: act.clone(), reason: reason.to_string() };
    let policy = policies.get(act);
    if requires_policy(sc) && policy.is_none() {
        return Err(mismatch("activity has no batching policy"));
    }
    if sc == 7 && policy.map(|p| p.batch_type) != Some(BatchType::Sequential) {
        return Err(mismatch("policy is not sequential"));
    }
    let delta = |change: DeltaChange, lambda: Option<f64>| PolicyDelta {
        activity_id: act.clone(),
        change,
        provenance: Provenance::scenario(sc, lambda),
    };
    let mut out: Vec<PolicyDelta> = Vec::new();
    let mut push = |d: PolicyDelta| {
        if !out.iter().any(|o| o.change == d.change) {
            out.push(d);
        }
    };

    match (sc, &instance.evidence) {
        (1 | 2, Evidence::Waits { per_batch_max, per_batch_min, .. }) => {
            let kind = if sc == 1 { ConditionKind::WtFirst } else { ConditionKind::WtLast };
            let existing = policy.and_then(|p| p.rule.locate(kind).first().copied());
            for &l in &config.lambdas {
                let value = if sc == 1 {
                    compute_wt_first_threshold(per_batch_max, l)?
                } else {
                    compute_wt_last_threshold(per_batch_min, l)?
                };
                let change = match existing {
                    Some(locator) => {
                        if policy.and_then(|p| p.rule.get(locator)).and_then(|c| c.threshold()) == Some(value) {
                            continue;
                        }
                        DeltaChange::ReplaceThreshold { locator, value }
                    }
                    None => {
                        let condition = if sc == 1 {
                            Condition::WtFirst { threshold: value }
                        } else {
                            Condition::WtLast { threshold: value }
                        };
                        DeltaChange::AddCondition { group: GroupTarget::New, condition }
                    }
                };
                push(delta(change, Some(l)));
            }
        }
        (3, Evidence::Peaks { enablement, execution }) => {
            for buckets in [enablement, execution] {
                if !buckets.is_empty() {
                    let pairs = build_schedule_set(&SlotHistogram::from_pairs(buckets.iter().copied()), config.top_k)?;
                    push(delta(DeltaChange::AddSchedule { pairs }, None));
                }
            }
        }
        (4, Evidence::Histogram { buckets }) => {
            let pairs = build_schedule_set(&SlotHistogram::from_pairs(buckets.iter().copied()), config.top_k)?;
            push(delta(DeltaChange::AddSchedule { pairs }, None));
        }
        (8, Evidence::Windows { starts, fitting }) => {
            if starts.is_empty() && fitting.is_empty() {
                return Err(mismatch("no candidate windows"));
            }
            let mut from_starts: Vec<_> = starts.iter().take(config.top_k).map(|&(s, _)| s).collect();
            from_starts.dedup();
            if !from_starts.is_empty() {
                push(delta(DeltaChange::ConstrainSchedule { pairs: from_starts }, None));
            }
            if !fitting.is_empty() {
                let pairs = build_schedule_set(&SlotHistogram::from_pairs(fitting.iter().copied()), config.top_k)?;
                push(delta(DeltaChange::ConstrainSchedule { pairs }, None));
            }
        }
        (9, Evidence::AlignedWaits { first, last }) => {
            for &l in &config.lambdas {
                let change = DeltaChange::AlignWaitThresholds {
                    first: compute_wt_first_threshold(first, l)?,
                    last: compute_wt_last_threshold(last, l)?,
                };
                push(delta(change, Some(l)));
            }
        }
        (_, Evidence::Sizes { sizes, current_threshold }) => {
            let dir = scenario_direction(sc).ok_or_else(|| mismatch("unexpected size evidence"))?;
            if sizes.is_empty() {
                return Err(InterventionError::EmptyInput);
            }
            let mean = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
            let baseline = match (current_threshold, policy) {
                (Some(t), _) => *t as i64,
                (None, None) => 1,
                (None, Some(_)) => round_half_up(mean),
            };
            for &l in &config.lambdas {
                let wanted = match dir {
                    SizeDirection::Reduce => l < 1.0,
                    SizeDirection::Grow => l > 1.0,
                };
                if !wanted {
                    continue;
                }
                let v = scale_size_threshold(sizes, l, config.min_size, config.max_size)?;
                let moves = match dir {
                    SizeDirection::Reduce => (v as i64) < baseline,
                    SizeDirection::Grow => (v as i64) > baseline,
                };
                if moves {
                    push(delta(DeltaChange::ScaleSize { threshold: v }, Some(l)));
                }
            }
        }
        _ => return Err(mismatch("evidence does not match the scenario")),
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{ActivationRule, BatchingPolicy, ConditionLocator, CostModel};
    use crate::time::{Slot, Weekday, HOUR};

    fn policy(bt: BatchType, rule: ActivationRule) -> PolicySet {
        PolicySet::from_policies([BatchingPolicy { activity_id: "A".into(), batch_type: bt, rule, cost: CostModel::default() }])
    }

    fn inst(scenario: u8, evidence: Evidence) -> ScenarioInstance {
        ScenarioInstance { scenario, activity_id: "A".into(), evidence }
    }

    #[test]
    fn wait_scenario_replaces_existing_threshold() {
        let ps = policy(BatchType::Parallel, ActivationRule::single(Condition::WtFirst { threshold: 20 * HOUR }));
        let i = inst(1, Evidence::Waits { per_batch_max: vec![10 * HOUR], per_batch_min: vec![HOUR], observed: 0.0, bound: 0.0 });
        let cfg = InterventionConfig { lambdas: vec![0.9], ..Default::default() };
        let d = derive_interventions(&i, &ps, &cfg).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(
            d[0].change,
            DeltaChange::ReplaceThreshold { locator: ConditionLocator { group: 0, index: 0 }, value: 9 * HOUR }
        );
        assert_eq!(d[0].provenance.scenario, Some(1));
    }

    #[test]
    fn wait_scenario_adds_missing_condition() {
        let ps = policy(BatchType::Parallel, ActivationRule::single(Condition::Size { threshold: 3 }));
        let i = inst(2, Evidence::Waits { per_batch_max: vec![10 * HOUR], per_batch_min: vec![2 * HOUR], observed: 0.0, bound: 0.0 });
        let d = derive_interventions(&i, &ps, &InterventionConfig::default()).unwrap();
        assert_eq!(d.len(), 4);
        assert!(matches!(
            d[0].change,
            DeltaChange::AddCondition { group: GroupTarget::New, condition: Condition::WtLast { threshold } } if threshold == HOUR
        ));
    }

    #[test]
    fn size_direction_filters() {
        let ps = policy(BatchType::Parallel, ActivationRule::single(Condition::Size { threshold: 4 }));
        let sizes = Evidence::Sizes { sizes: vec![4, 4], current_threshold: Some(4) };
        let reduce = derive_interventions(&inst(5, sizes.clone()), &ps, &InterventionConfig::default()).unwrap();
        let got: Vec<_> = reduce.iter().map(|d| d.change.clone()).collect();
        assert_eq!(got, vec![DeltaChange::ScaleSize { threshold: 2 }, DeltaChange::ScaleSize { threshold: 3 }]);
        let grow = derive_interventions(&inst(6, sizes), &ps, &InterventionConfig::default()).unwrap();
        let got: Vec<_> = grow.iter().map(|d| d.change.clone()).collect();
        assert_eq!(got, vec![DeltaChange::ScaleSize { threshold: 5 }, DeltaChange::ScaleSize { threshold: 8 }]);
    }

    #[test]
    fn schedule_scenario() {
        let mon8 = Slot::new(Weekday::Mon, 8);
        let mon9 = Slot::new(Weekday::Mon, 9);
        let i = inst(
            3,
            Evidence::Peaks { enablement: vec![(mon8, 5), (Slot::new(Weekday::Fri, 9), 1)], execution: vec![(mon9, 6)] },
        );
        let cfg = InterventionConfig { top_k: 1, ..Default::default() };
        let d = derive_interventions(&i, &PolicySet::new(), &cfg).unwrap();
        let got: Vec<_> = d.into_iter().map(|x| x.change).collect();
        assert_eq!(got, vec![DeltaChange::AddSchedule { pairs: vec![mon8] }, DeltaChange::AddSchedule { pairs: vec![mon9] }]);
    }

    #[test]
    fn mismatches_are_errors() {
        let par = policy(BatchType::Parallel, ActivationRule::single(Condition::Size { threshold: 4 }));
        let sizes = Evidence::Sizes { sizes: vec![4], current_threshold: Some(4) };
        assert!(matches!(
            derive_interventions(&inst(7, sizes.clone()), &par, &InterventionConfig::default()),
            Err(InterventionError::Mismatch { scenario: 7, .. })
        ));
        assert!(derive_interventions(&inst(5, sizes.clone()), &PolicySet::new(), &InterventionConfig::default()).is_err());
        assert!(derive_interventions(&inst(3, sizes), &par, &InterventionConfig::default()).is_err());
    }
}
