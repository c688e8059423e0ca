use super::{ActivationRule, BatchState, Condition, ConditionGroup, PolicyError};
use crate::time::{hour, next_hour_boundary, weekday, Timestamp, WEEK};

/// The part of a batch queue the activation conditions look at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueueSnapshot {
    pub size: usize,
    pub first_enable: Timestamp,
    pub last_enable: Timestamp,
    pub now: Timestamp,
}

impl QueueSnapshot {
    pub fn of(state: &BatchState) -> Result<Self, PolicyError> {
        let first = state.waiting.first().ok_or(PolicyError::EmptyWaiting)?;
        let last = state.waiting.last().expect("non-empty");
        Ok(QueueSnapshot { size: state.waiting.len(), first_enable: first.1, last_enable: last.1, now: state.now })
    }

    fn at(self, now: Timestamp) -> Self {
        QueueSnapshot { now, ..self }
    }
}

impl Condition {
    pub fn holds(&self, q: &QueueSnapshot) -> bool {
        match self {
            Condition::Size { threshold } => q.size >= *threshold as usize,
            Condition::WtFirst { threshold } => q.now - q.first_enable >= *threshold,
            Condition::WtLast { threshold } => q.now - q.last_enable >= *threshold,
            Condition::DailyHour { hours } => hours.contains(&hour(q.now)),
            Condition::WeekDay { days } => days.contains(&weekday(q.now)),
        }
    }
}

impl ConditionGroup {
    pub fn holds(&self, q: &QueueSnapshot) -> bool {
        self.conditions.iter().all(|c| c.holds(q))
    }

    /// Earliest `t >= q.now` at which the group holds, the queue unchanged.
    fn next_fire(&self, q: &QueueSnapshot) -> Option<Timestamp> {
        let mut earliest = q.now;
        let mut scheduled = false;
        for c in &self.conditions {
            match c {
                Condition::Size { threshold } => {
                    if q.size < *threshold as usize {
                        return None;
                    }
                }
                Condition::WtFirst { threshold } => earliest = earliest.max(q.first_enable + threshold),
                Condition::WtLast { threshold } => earliest = earliest.max(q.last_enable + threshold),
                Condition::DailyHour { .. } | Condition::WeekDay { .. } => scheduled = true,
            }
        }
        if !scheduled {
            return Some(earliest);
        }
        // Scheduled conditions are constant within an hour, so only hour
        // boundaries need checking; a week covers every slot.
        let mut t = earliest;
        while t <= earliest + WEEK {
            if self.holds(&q.at(t)) {
                return Some(t);
            }
            t = next_hour_boundary(t);
        }
        None
    }
}

impl ActivationRule {
    pub fn holds(&self, q: &QueueSnapshot) -> bool {
        q.size > 0 && self.groups.iter().any(|g| g.holds(q))
    }

    /// Earliest instant `t >= q.now` at which the rule fires if no instance
    /// joins or leaves the queue. `None` when it never fires.
    pub fn next_fire_time(&self, q: &QueueSnapshot) -> Option<Timestamp> {
        if q.size == 0 {
            return None;
        }
        self.groups.iter().filter_map(|g| g.next_fire(q)).min()
    }
}

pub fn evaluate_condition(cond: &Condition, state: &BatchState) -> Result<bool, PolicyError> {
    Ok(cond.holds(&QueueSnapshot::of(state)?))
}

pub fn evaluate_activation_rule(rule: &ActivationRule, state: &BatchState) -> Result<bool, PolicyError> {
    Ok(rule.holds(&QueueSnapshot::of(state)?))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use proptest::prelude::*;

    use super::*;
    use crate::time::{Weekday, DAY, HOUR, MINUTE};

    fn state(enables: &[Timestamp], now: Timestamp) -> BatchState {
        BatchState {
            activity_id: "A".into(),
            waiting: enables.iter().enumerate().map(|(i, &e)| (i as u64, e)).collect(),
            now,
        }
    }

    fn rule(groups: Vec<Vec<Condition>>) -> ActivationRule {
        ActivationRule::new(groups.into_iter().map(ConditionGroup::new).collect())
    }

    #[test]
    fn size_boundary_is_inclusive() {
        let c = Condition::Size { threshold: 3 };
        assert!(evaluate_condition(&c, &state(&[0, 0, 0], 0)).unwrap());
        assert!(!evaluate_condition(&c, &state(&[0, 0], 0)).unwrap());
    }

    #[test]
    fn wt_first_just_short() {
        let c = Condition::WtFirst { threshold: 24 * HOUR };
        let now = 23 * HOUR + 59 * MINUTE;
        assert!(!evaluate_condition(&c, &state(&[0], now)).unwrap());
        assert!(evaluate_condition(&c, &state(&[0], now + MINUTE)).unwrap());
    }

    #[test]
    fn daily_hour_truncates() {
        let c = Condition::hour(8);
        // Epoch is Monday 00:00.
        let oracle_hour = |t: Timestamp| ((t.rem_euclid(DAY)) / HOUR) as u8;
        let t1 = 8 * HOUR + 30 * MINUTE;
        let t2 = 9 * HOUR;
        assert_eq!(oracle_hour(t1), 8);
        assert!(evaluate_condition(&c, &state(&[0], t1)).unwrap());
        assert!(!evaluate_condition(&c, &state(&[0], t2)).unwrap());
    }

    #[test]
    fn empty_waiting_is_an_error() {
        assert!(matches!(
            evaluate_condition(&Condition::Size { threshold: 1 }, &state(&[], 0)),
            Err(PolicyError::EmptyWaiting)
        ));
    }

    #[test]
    fn empty_rule_never_fires() {
        let r = ActivationRule::default();
        assert!(!evaluate_activation_rule(&r, &state(&[0, 1, 2], 10 * DAY)).unwrap());
        let q = QueueSnapshot::of(&state(&[0], 0)).unwrap();
        assert_eq!(r.next_fire_time(&q), None);
    }

    #[test]
    fn second_group_fires() {
        let r = rule(vec![
            vec![Condition::Size { threshold: 5 }, Condition::hour(8)],
            vec![Condition::WtFirst { threshold: 24 * HOUR }],
        ]);
        assert!(evaluate_activation_rule(&r, &state(&[0, 10 * HOUR], 30 * HOUR)).unwrap());
    }

    #[test]
    fn conjunction_falsified_by_day() {
        let r = rule(vec![vec![Condition::Size { threshold: 2 }, Condition::day(Weekday::Sat)]]);
        let tuesday = DAY + 10 * HOUR;
        assert!(!evaluate_activation_rule(&r, &state(&[0, 0, 0, 0], tuesday)).unwrap());
    }

    #[test]
    fn next_fire_time_examples() {
        let q = QueueSnapshot { size: 2, first_enable: 0, last_enable: HOUR, now: HOUR };
        let r = rule(vec![vec![Condition::WtLast { threshold: 2 * HOUR }]]);
        assert_eq!(r.next_fire_time(&q), Some(3 * HOUR));
        let sched = rule(vec![vec![Condition::day(Weekday::Tue), Condition::hour(9)]]);
        assert_eq!(sched.next_fire_time(&q), Some(DAY + 9 * HOUR));
        let too_big = rule(vec![vec![Condition::Size { threshold: 3 }]]);
        assert_eq!(too_big.next_fire_time(&q), None);
    }

    fn arb_condition() -> impl Strategy<Value = Condition> {
        prop_oneof![
            (1u32..6).prop_map(|threshold| Condition::Size { threshold }),
            (0i64..48).prop_map(|h| Condition::WtFirst { threshold: h * HOUR }),
            (0i64..48).prop_map(|h| Condition::WtLast { threshold: h * HOUR }),
            prop::collection::btree_set(0u8..24, 1..4).prop_map(|hours| Condition::DailyHour { hours }),
            prop::collection::btree_set(0usize..7, 1..3)
                .prop_map(|d| Condition::WeekDay { days: d.into_iter().map(Weekday::from_index).collect() }),
        ]
    }

    fn arb_rule() -> impl Strategy<Value = ActivationRule> {
        prop::collection::vec(prop::collection::vec(arb_condition(), 1..4), 0..4).prop_map(|groups| {
            // Keep one condition per kind in each group.
            ActivationRule::new(
                groups
                    .into_iter()
                    .map(|g| {
                        let mut seen = BTreeSet::new();
                        ConditionGroup::new(g.into_iter().filter(|c| seen.insert(c.kind())).collect())
                    })
                    .collect(),
            )
        })
    }

    /// Direct truth-table evaluation from raw timestamps.
    fn brute(rule: &ActivationRule, enables: &[Timestamp], now: Timestamp) -> bool {
        let mut any = false;
        for g in &rule.groups {
            let mut all = true;
            for c in &g.conditions {
                let v = match c {
                    Condition::Size { threshold } => enables.len() as u32 >= *threshold,
                    Condition::WtFirst { threshold } => now - enables.iter().min().unwrap() >= *threshold,
                    Condition::WtLast { threshold } => now - enables.iter().max().unwrap() >= *threshold,
                    Condition::DailyHour { hours } => hours.contains(&(((now % DAY) / HOUR) as u8)),
                    Condition::WeekDay { days } => days.contains(&Weekday::from_index(((now / DAY) % 7) as usize)),
                };
                all = all && v;
            }
            any = any || all;
        }
        any
    }

    proptest! {
        #[test]
        fn rule_matches_truth_table(r in arb_rule(), mut enables in prop::collection::vec(0i64..(3 * DAY), 1..8), dt in 0i64..(3 * DAY)) {
            enables.sort();
            let now = enables[enables.len() - 1] + dt;
            prop_assert_eq!(evaluate_activation_rule(&r, &state(&enables, now)).unwrap(), brute(&r, &enables, now));
        }

        #[test]
        fn next_fire_time_is_first_true_instant(r in arb_rule(), mut enables in prop::collection::vec(0i64..DAY, 1..6), dt in 0i64..DAY) {
            enables.sort();
            let now = enables[enables.len() - 1] + dt;
            let q = QueueSnapshot { size: enables.len(), first_enable: enables[0], last_enable: enables[enables.len() - 1], now };
            match r.next_fire_time(&q) {
                Some(t) => {
                    prop_assert!(t >= now);
                    prop_assert!(r.holds(&q.at(t)));
                    // No earlier minute works (conditions change on whole seconds; minute grid
                    // suffices as thresholds are whole hours here).
                    let mut s = now;
                    while s < t {
                        prop_assert!(!r.holds(&q.at(s)), "fires earlier at {}", s);
                        s = (s / MINUTE + 1) * MINUTE;
                    }
                }
                None => {
                    let mut s = now;
                    while s < now + 2 * WEEK {
                        prop_assert!(!r.holds(&q.at(s)));
                        s += HOUR;
                    }
                }
            }
        }

        #[test]
        fn monotone_in_size_and_time(threshold in 1u32..6, n in 1usize..8, dt in 0i64..DAY, h in 0i64..48) {
            let q = QueueSnapshot { size: n, first_enable: 0, last_enable: 0, now: dt };
            let size = Condition::Size { threshold };
            if size.holds(&q) {
                let bigger = QueueSnapshot { size: n + 1, ..q };
                prop_assert!(size.holds(&bigger));
            }
            for c in [Condition::WtFirst { threshold: h * HOUR }, Condition::WtLast { threshold: h * HOUR }] {
                if c.holds(&q) {
                    prop_assert!(c.holds(&q.at(dt + HOUR)));
                }
            }
        }
    }
}
