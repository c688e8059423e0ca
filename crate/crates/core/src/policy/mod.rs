//! Batching policies: batch type, activation rule (a disjunction of condition
//! groups) and cost model.

mod cost;
mod rule;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ProcessModel;
use crate::time::{Seconds, Slot, Timestamp, Weekday};

pub use cost::{compute_batch_cost, CostModel, ResourceCostMode};
pub use rule::{evaluate_activation_rule, evaluate_condition, QueueSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchType {
    Sequential,
    Parallel,
}

impl BatchType {
    pub fn toggled(self) -> Self {
        match self {
            BatchType::Sequential => BatchType::Parallel,
            BatchType::Parallel => BatchType::Sequential,
        }
    }
}

impl fmt::Display for BatchType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BatchType::Sequential => "sequential",
            BatchType::Parallel => "parallel",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionKind {
    Size,
    WtFirst,
    WtLast,
    DailyHour,
    WeekDay,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Condition {
    /// At least `threshold` instances waiting.
    Size { threshold: u32 },
    /// Earliest waiting instance has waited at least `threshold` seconds.
    WtFirst { threshold: Seconds },
    /// Latest waiting instance has waited at least `threshold` seconds.
    WtLast { threshold: Seconds },
    DailyHour { hours: BTreeSet<u8> },
    WeekDay { days: BTreeSet<Weekday> },
}

impl Condition {
    pub fn kind(&self) -> ConditionKind {
        match self {
            Condition::Size { .. } => ConditionKind::Size,
            Condition::WtFirst { .. } => ConditionKind::WtFirst,
            Condition::WtLast { .. } => ConditionKind::WtLast,
            Condition::DailyHour { .. } => ConditionKind::DailyHour,
            Condition::WeekDay { .. } => ConditionKind::WeekDay,
        }
    }

    /// Numeric threshold of size / waiting-time conditions.
    pub fn threshold(&self) -> Option<i64> {
        match *self {
            Condition::Size { threshold } => Some(threshold as i64),
            Condition::WtFirst { threshold } | Condition::WtLast { threshold } => Some(threshold),
            _ => None,
        }
    }

    pub fn with_threshold(&self, value: i64) -> Option<Condition> {
        match self {
            Condition::Size { .. } => Some(Condition::Size { threshold: value.max(0) as u32 }),
            Condition::WtFirst { .. } => Some(Condition::WtFirst { threshold: value }),
            Condition::WtLast { .. } => Some(Condition::WtLast { threshold: value }),
            _ => None,
        }
    }

    pub fn day(d: Weekday) -> Self {
        Condition::WeekDay { days: [d].into_iter().collect() }
    }

    pub fn hour(h: u8) -> Self {
        Condition::DailyHour { hours: [h].into_iter().collect() }
    }

    fn problems(&self) -> Vec<String> {
        match self {
            Condition::Size { threshold } if *threshold < 1 => vec!["size threshold must be >= 1".into()],
            Condition::WtFirst { threshold } | Condition::WtLast { threshold } if *threshold < 0 => {
                vec!["waiting-time threshold must be >= 0".into()]
            }
            Condition::DailyHour { hours } if hours.is_empty() => vec!["daily-hour set is empty".into()],
            Condition::DailyHour { hours } if hours.iter().any(|h| *h > 23) => {
                vec!["daily-hour values must lie in 0..=23".into()]
            }
            Condition::WeekDay { days } if days.is_empty() => vec!["week-day set is empty".into()],
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Size { threshold } => write!(f, "size>={threshold}"),
            Condition::WtFirst { threshold } => write!(f, "wt-first>={threshold}s"),
            Condition::WtLast { threshold } => write!(f, "wt-last>={threshold}s"),
            Condition::DailyHour { hours } => {
                let hs: Vec<String> = hours.iter().map(|h| h.to_string()).collect();
                write!(f, "hour in {{{}}}", hs.join(","))
            }
            Condition::WeekDay { days } => {
                let ds: Vec<String> = days.iter().map(|d| d.to_string()).collect();
                write!(f, "day in {{{}}}", ds.join(","))
            }
        }
    }
}

/// Conjunction of conditions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConditionGroup {
    pub conditions: Vec<Condition>,
}

impl ConditionGroup {
    pub fn new(conditions: Vec<Condition>) -> Self {
        ConditionGroup { conditions }
    }

    pub fn find(&self, kind: ConditionKind) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.kind() == kind)
    }

    /// Whether both scheduled conditions of the group admit the slot, given
    /// the group carries at least one scheduled condition.
    pub fn schedules(&self, slot: Slot) -> bool {
        let day = self.find(ConditionKind::WeekDay);
        let hour = self.find(ConditionKind::DailyHour);
        if day.is_none() && hour.is_none() {
            return false;
        }
        let day_ok = match day {
            Some(Condition::WeekDay { days }) => days.contains(&slot.day),
            _ => true,
        };
        let hour_ok = match hour {
            Some(Condition::DailyHour { hours }) => hours.contains(&slot.hour),
            _ => true,
        };
        day_ok && hour_ok
    }
}

impl fmt::Display for ConditionGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.conditions.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(" & "))
    }
}

/// Disjunction of condition groups. With zero groups the rule never fires.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActivationRule {
    pub groups: Vec<ConditionGroup>,
}

impl ActivationRule {
    pub fn new(groups: Vec<ConditionGroup>) -> Self {
        ActivationRule { groups }
    }

    pub fn single(c: Condition) -> Self {
        ActivationRule { groups: vec![ConditionGroup::new(vec![c])] }
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Locations `(group, index)` of every condition of `kind`.
    pub fn locate(&self, kind: ConditionKind) -> Vec<ConditionLocator> {
        let mut out = Vec::new();
        for (g, group) in self.groups.iter().enumerate() {
            for (i, c) in group.conditions.iter().enumerate() {
                if c.kind() == kind {
                    out.push(ConditionLocator { group: g, index: i });
                }
            }
        }
        out
    }

    pub fn has(&self, kind: ConditionKind) -> bool {
        !self.locate(kind).is_empty()
    }

    pub fn get(&self, loc: ConditionLocator) -> Option<&Condition> {
        self.groups.get(loc.group)?.conditions.get(loc.index)
    }

    pub fn schedules(&self, slot: Slot) -> bool {
        self.groups.iter().any(|g| g.schedules(slot))
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (gi, g) in self.groups.iter().enumerate() {
            if g.conditions.is_empty() {
                out.push(format!("group {gi} is empty"));
            }
            let mut kinds = BTreeSet::new();
            for c in &g.conditions {
                if !kinds.insert(c.kind()) {
                    out.push(format!("group {gi} repeats condition kind {:?}", c.kind()));
                }
                for p in c.problems() {
                    out.push(format!("group {gi}: {p} ({c})"));
                }
            }
        }
        out
    }
}

impl fmt::Display for ActivationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.groups.is_empty() {
            return f.write_str("never");
        }
        let parts: Vec<String> = self.groups.iter().map(|g| g.to_string()).collect();
        f.write_str(&parts.join(" | "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConditionLocator {
    pub group: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BatchingPolicy {
    #[serde(rename = "activity")]
    pub activity_id: String,
    pub batch_type: BatchType,
    pub rule: ActivationRule,
    #[serde(default)]
    pub cost: CostModel,
}

impl BatchingPolicy {
    pub fn problems(&self) -> Vec<String> {
        let mut out = self.rule.problems();
        out.extend(self.cost.problems());
        out
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyDoc {
    policies: Vec<BatchingPolicy>,
}

/// Per-activity policies, keyed by activity id. Activities absent from the set
/// run unbatched.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolicyDoc", into = "PolicyDoc")]
pub struct PolicySet {
    policies: BTreeMap<String, BatchingPolicy>,
}

impl TryFrom<PolicyDoc> for PolicySet {
    type Error = String;

    fn try_from(doc: PolicyDoc) -> Result<Self, Self::Error> {
        let mut policies = BTreeMap::new();
        for p in doc.policies {
            if policies.contains_key(&p.activity_id) {
                return Err(format!("duplicate policy for activity `{}`", p.activity_id));
            }
            policies.insert(p.activity_id.clone(), p);
        }
        Ok(PolicySet { policies })
    }
}

impl From<PolicySet> for PolicyDoc {
    fn from(s: PolicySet) -> Self {
        PolicyDoc { policies: s.policies.into_values().collect() }
    }
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("policy document invalid at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("policy for activity `{0}` references an unknown activity")]
    UnknownActivity(String),
    #[error("policy for activity `{activity}` is invalid: {problems}")]
    Invalid { activity: String, problems: String },
    #[error("activation rule evaluated on an empty waiting list")]
    EmptyWaiting,
    #[error("batch size {size} does not match {times} processing times")]
    SizeMismatch { size: usize, times: usize },
}

pub fn parse_policies(text: &str) -> Result<PolicySet, PolicyError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| PolicyError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn serialize_policies(set: &PolicySet) -> String {
    serde_json::to_string_pretty(set).expect("policies serialize")
}

impl PolicySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_policies(list: impl IntoIterator<Item = BatchingPolicy>) -> Self {
        PolicySet { policies: list.into_iter().map(|p| (p.activity_id.clone(), p)).collect() }
    }

    pub fn get(&self, activity: &str) -> Option<&BatchingPolicy> {
        self.policies.get(activity)
    }

    pub fn insert(&mut self, policy: BatchingPolicy) {
        self.policies.insert(policy.activity_id.clone(), policy);
    }

    pub fn iter(&self) -> impl Iterator<Item = &BatchingPolicy> {
        self.policies.values()
    }

    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    /// Checks every policy's invariants and that it targets a model activity.
    pub fn check(&self, model: &ProcessModel) -> Result<(), PolicyError> {
        for p in self.policies.values() {
            if model.activity(&p.activity_id).is_none() {
                return Err(PolicyError::UnknownActivity(p.activity_id.clone()));
            }
            let problems = p.problems();
            if !problems.is_empty() {
                return Err(PolicyError::Invalid { activity: p.activity_id.clone(), problems: problems.join("; ") });
            }
        }
        Ok(())
    }

    /// Canonical JSON used for identity comparisons and hashing.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("policies serialize")
    }
}

/// What the activation conditions read from the process state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchState {
    pub activity_id: String,
    /// `(instance id, enablement time)`, earliest first.
    pub waiting: Vec<(u64, Timestamp)>,
    pub now: Timestamp,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_document_round_trip() {
        let text = r#"{"policies":[{"activity":"A","batchType":"parallel",
            "rule":[[{"kind":"size","threshold":3},{"kind":"daily-hour","hours":[8]}],
                    [{"kind":"wt-first","threshold":86400}],
                    [{"kind":"wt-last","threshold":600},{"kind":"week-day","days":["Mon","Tue"]}]],
            "cost":{"fixed":5,"variable":[[1,0.0],[4,2.0]],"resource":{"mode":"per-time"}}}]}"#;
        let set = parse_policies(text).unwrap();
        let p = set.get("A").unwrap();
        assert_eq!(p.rule.groups.len(), 3);
        assert_eq!(p.batch_type, BatchType::Parallel);
        let again = parse_policies(&serialize_policies(&set)).unwrap();
        assert_eq!(again, set);
    }

    #[test]
    fn invalid_condition_named() {
        let text = r#"{"policies":[{"activity":"A","batchType":"parallel","rule":[[{"kind":"size","threshold":"x"}]]}]}"#;
        let err = parse_policies(text).unwrap_err();
        assert!(err.to_string().contains("policies[0].rule"), "{err}");
    }

    #[test]
    fn invariants_checked() {
        let p = BatchingPolicy {
            activity_id: "A".into(),
            batch_type: BatchType::Parallel,
            rule: ActivationRule::new(vec![ConditionGroup::new(vec![
                Condition::Size { threshold: 0 },
                Condition::Size { threshold: 2 },
            ])]),
            cost: CostModel::default(),
        };
        let probs = p.problems();
        assert!(probs.iter().any(|s| s.contains(">= 1")));
        assert!(probs.iter().any(|s| s.contains("repeats")));
    }

    #[test]
    fn schedule_matching() {
        let g = ConditionGroup::new(vec![Condition::day(Weekday::Mon), Condition::hour(8)]);
        assert!(g.schedules(Slot::new(Weekday::Mon, 8)));
        assert!(!g.schedules(Slot::new(Weekday::Mon, 9)));
        let size_only = ConditionGroup::new(vec![Condition::Size { threshold: 2 }]);
        assert!(!size_only.schedules(Slot::new(Weekday::Mon, 8)));
    }
}
