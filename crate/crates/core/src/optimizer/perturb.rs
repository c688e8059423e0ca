use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::interventions::{round_half_up, DeltaChange, GroupTarget, InterventionConfig, PolicyDelta, Provenance};
use crate::model::ProcessModel;
use crate::policy::{BatchType, Condition, ConditionKind, PolicySet};
use crate::sim::EventLog;
use crate::time::{Seconds, Slot, Weekday, HOUR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoveKind {
    ScaleSize,
    WtFirst,
    WtLast,
    Schedule,
    ToggleType,
}

impl MoveKind {
    pub const ALL: [MoveKind; 5] = [MoveKind::ScaleSize, MoveKind::WtFirst, MoveKind::WtLast, MoveKind::Schedule, MoveKind::ToggleType];

    pub fn name(self) -> &'static str {
        match self {
            MoveKind::ScaleSize => "scale-size",
            MoveKind::WtFirst => "wt-first",
            MoveKind::WtLast => "wt-last",
            MoveKind::Schedule => "schedule",
            MoveKind::ToggleType => "toggle-type",
        }
    }

    pub fn of(provenance: &Provenance) -> Option<MoveKind> {
        let name = provenance.random_move.as_deref()?;
        MoveKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// What random moves need to know about the current solution.
#[derive(Debug, Clone)]
pub struct PerturbationContext {
    /// Activities a move may target, in model order.
    pub activities: Vec<String>,
    pub mean_batch_sizes: HashMap<String, f64>,
    /// Largest observed wait, the upper bound for random wait thresholds.
    pub max_wait: Seconds,
}

impl PerturbationContext {
    pub fn new(model: &ProcessModel) -> Self {
        PerturbationContext {
            activities: model.activities.iter().map(|a| a.id.clone()).collect(),
            mean_batch_sizes: HashMap::new(),
            max_wait: HOUR,
        }
    }

    pub fn from_log(model: &ProcessModel, log: &EventLog) -> Self {
        let mut ctx = Self::new(model);
        let mut sums: HashMap<&str, (usize, usize)> = HashMap::new();
        for b in &log.batches {
            let e = sums.entry(b.activity.as_str()).or_default();
            e.0 += b.size();
            e.1 += 1;
        }
        ctx.mean_batch_sizes = sums.into_iter().map(|(a, (s, n))| (a.to_string(), s as f64 / n as f64)).collect();
        let w = log.records.iter().map(|r| r.start_time - r.enable_time).max().unwrap_or(0);
        if w > 0 {
            ctx.max_wait = w;
        }
        ctx
    }
}

/// `k` random neighbourhood moves, each picking an activity and a move kind
/// uniformly.
pub fn random_perturbation<R: Rng + ?Sized>(
    policies: &PolicySet,
    ctx: &PerturbationContext,
    rng: &mut R,
    config: &InterventionConfig,
    k: usize,
) -> Vec<PolicyDelta> {
    let mut out = Vec::with_capacity(k);
    if ctx.activities.is_empty() {
        return out;
    }
    for _ in 0..k {
        let act = &ctx.activities[rng.random_range(0..ctx.activities.len())];
        let kind = MoveKind::ALL[rng.random_range(0..MoveKind::ALL.len())];
        let policy = policies.get(act);
        let (change, lambda) = match kind {
            MoveKind::ScaleSize => {
                let l = config.lambdas[rng.random_range(0..config.lambdas.len())];
                let current = policy
                    .and_then(|p| p.rule.locate(ConditionKind::Size).first().and_then(|&loc| p.rule.get(loc)?.threshold()))
                    .map(|t| t as f64)
                    .unwrap_or_else(|| ctx.mean_batch_sizes.get(act).copied().unwrap_or(1.0).round().max(1.0));
                let v = round_half_up(l * current).clamp(config.min_size as i64, config.max_size as i64) as u32;
                (DeltaChange::ScaleSize { threshold: v }, Some(l))
            }
            MoveKind::WtFirst | MoveKind::WtLast => {
                let t = rng.random_range(0..=ctx.max_wait);
                let (ck, condition) = if kind == MoveKind::WtFirst {
                    (ConditionKind::WtFirst, Condition::WtFirst { threshold: t })
                } else {
                    (ConditionKind::WtLast, Condition::WtLast { threshold: t })
                };
                match policy.and_then(|p| p.rule.locate(ck).first().copied()) {
                    Some(locator) => (DeltaChange::ReplaceThreshold { locator, value: t }, None),
                    None => (DeltaChange::AddCondition { group: GroupTarget::New, condition }, None),
                }
            }
            MoveKind::Schedule => {
                let slot = Slot::new(Weekday::from_index(rng.random_range(0..7)), rng.random_range(0..24));
                (DeltaChange::AddSchedule { pairs: vec![slot] }, None)
            }
            MoveKind::ToggleType => {
                let bt = policy.map(|p| p.batch_type).unwrap_or(BatchType::Parallel).toggled();
                (DeltaChange::SetBatchType { batch_type: bt }, None)
            }
        };
        out.push(PolicyDelta { activity_id: act.clone(), change, provenance: Provenance::random(kind.name(), lambda) });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interventions::apply_delta;
    use crate::model::tests::single_activity_model;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    #[test]
    fn deterministic_for_seed() {
        let m = single_activity_model(3);
        let ctx = PerturbationContext::new(&m);
        let cfg = InterventionConfig::default();
        let a = random_perturbation(&PolicySet::new(), &ctx, &mut ChaCha8Rng::seed_from_u64(4), &cfg, 20);
        let b = random_perturbation(&PolicySet::new(), &ctx, &mut ChaCha8Rng::seed_from_u64(4), &cfg, 20);
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
    }

    #[test]
    fn all_move_kinds_drawn() {
        let m = single_activity_model(3);
        let ctx = PerturbationContext::new(&m);
        let d = random_perturbation(&PolicySet::new(), &ctx, &mut ChaCha8Rng::seed_from_u64(1), &InterventionConfig::default(), 1000);
        let kinds: BTreeSet<MoveKind> = d.iter().filter_map(|x| MoveKind::of(&x.provenance)).collect();
        assert_eq!(kinds.len(), 5);
    }

    proptest! {
        #[test]
        fn moves_always_apply(seed in any::<u64>(), steps in 1usize..12) {
            let m = single_activity_model(3);
            let ctx = PerturbationContext { max_wait: 5 * HOUR, ..PerturbationContext::new(&m) };
            let cfg = InterventionConfig::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ps = PolicySet::new();
            for _ in 0..steps {
                for d in random_perturbation(&ps, &ctx, &mut rng, &cfg, 1) {
                    ps = apply_delta(&m, &ps, &d).unwrap();
                    prop_assert!(ps.check(&m).is_ok());
                }
            }
        }
    }
}
