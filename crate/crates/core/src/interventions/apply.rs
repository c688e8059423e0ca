use super::{DeltaChange, GroupTarget, InterventionError, PolicyDelta};
use crate::model::ProcessModel;
use crate::policy::{
    ActivationRule, BatchType, BatchingPolicy, Condition, ConditionGroup, ConditionKind, CostModel, PolicySet,
};
use crate::time::Slot;

fn schedule_group(slot: Slot, base: &[Condition]) -> ConditionGroup {
    let mut conditions = base.to_vec();
    conditions.push(Condition::day(slot.day));
    conditions.push(Condition::hour(slot.hour));
    ConditionGroup::new(conditions)
}

fn push_unique(groups: &mut Vec<ConditionGroup>, g: ConditionGroup) {
    if !groups.contains(&g) {
        groups.push(g);
    }
}

fn is_scheduled(g: &ConditionGroup) -> bool {
    g.find(ConditionKind::WeekDay).is_some() || g.find(ConditionKind::DailyHour).is_some()
}

fn set_or_add(rule: &mut ActivationRule, condition: Condition) {
    let locs = rule.locate(condition.kind());
    if locs.is_empty() {
        rule.groups.push(ConditionGroup::new(vec![condition]));
    } else {
        for l in locs {
            rule.groups[l.group].conditions[l.index] = condition.clone();
        }
    }
}

/// Returns a new policy set with `delta` applied; the input is untouched.
/// An activity without a policy gets a parallel one with an empty rule and
/// its per-execution fixed cost as the per-batch fixed cost.
pub fn apply_delta(model: &ProcessModel, policies: &PolicySet, delta: &PolicyDelta) -> Result<PolicySet, InterventionError> {
    let act = &delta.activity_id;
    let activity = model.activity(act).ok_or_else(|| InterventionError::UnknownActivity(act.clone()))?;
    let mut policy = policies.get(act).cloned().unwrap_or_else(|| BatchingPolicy {
        activity_id: act.clone(),
        batch_type: BatchType::Parallel,
        rule: ActivationRule::default(),
        cost: CostModel::fixed(activity.fixed_cost_per_execution),
    });
    let rule = &mut policy.rule;
    match &delta.change {
        DeltaChange::AddCondition { group: GroupTarget::New, condition } => {
            rule.groups.push(ConditionGroup::new(vec![condition.clone()]));
        }
        DeltaChange::AddCondition { group: GroupTarget::Index(g), condition } => {
            let group = rule
                .groups
                .get_mut(*g)
                .ok_or_else(|| InterventionError::InvalidDelta(format!("group {g} does not exist")))?;
            match group.conditions.iter_mut().find(|c| c.kind() == condition.kind()) {
                Some(c) => *c = condition.clone(),
                None => group.conditions.push(condition.clone()),
            }
        }
        DeltaChange::ReplaceThreshold { locator, value } => {
            let new = rule
                .get(*locator)
                .and_then(|c| c.with_threshold(*value))
                .ok_or_else(|| InterventionError::InvalidDelta(format!("no thresholded condition at {locator:?}")))?;
            rule.groups[locator.group].conditions[locator.index] = new;
        }
        DeltaChange::AddSchedule { pairs } => {
            for &s in pairs {
                push_unique(&mut rule.groups, schedule_group(s, &[]));
            }
        }
        DeltaChange::ConstrainSchedule { pairs } => {
            if pairs.is_empty() {
                return Err(InterventionError::InvalidDelta("empty schedule".into()));
            }
            let mut groups = Vec::new();
            if rule.groups.is_empty() {
                for &s in pairs {
                    push_unique(&mut groups, schedule_group(s, &[]));
                }
            }
            for g in &rule.groups {
                if is_scheduled(g) {
                    push_unique(&mut groups, g.clone());
                } else {
                    for &s in pairs {
                        push_unique(&mut groups, schedule_group(s, &g.conditions));
                    }
                }
            }
            rule.groups = groups;
        }
        DeltaChange::ScaleSize { threshold } => set_or_add(rule, Condition::Size { threshold: *threshold }),
        DeltaChange::AlignWaitThresholds { first, last } => {
            set_or_add(rule, Condition::WtFirst { threshold: *first });
            set_or_add(rule, Condition::WtLast { threshold: *last });
        }
        DeltaChange::SetBatchType { batch_type } => policy.batch_type = *batch_type,
    }
    let problems = policy.problems();
    if !problems.is_empty() {
        return Err(InterventionError::InvalidDelta(problems.join("; ")));
    }
    let mut out = policies.clone();
    out.insert(policy);
    Ok(out)
}
