use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::perturb::{random_perturbation, MoveKind, PerturbationContext};
use super::{
    apply_all, check_failures, convergence_point, guided_deltas, reward, AuditRecord, Evaluator, OptimizationResult,
    OptimizerConfig, OptimizerError,
};
use crate::analytics::{compute_stats, ALL_SCENARIOS};
use crate::interventions::PolicyDelta;
use crate::model::ProcessModel;
use crate::pareto::{ParetoFront, Point, Solution};
use crate::policy::PolicySet;
use crate::sim::EventLog;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct Rewards {
    pub dominate: f64,
    pub improve: f64,
    pub penalty: f64,
}

impl Default for Rewards {
    fn default() -> Self {
        Rewards { dominate: 1.0, improve: 0.25, penalty: -0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct RlConfig {
    pub max_iterations: usize,
    pub rewards: Rewards,
    /// Transitions collected before each policy update.
    pub buffer_size: usize,
    pub update_epochs: usize,
    pub clip_ratio: f64,
    pub learning_rate: f64,
    pub value_learning_rate: f64,
    /// Weight of the next state's value in the advantage target.
    pub discount: f64,
}

impl Default for RlConfig {
    fn default() -> Self {
        RlConfig {
            max_iterations: 200,
            rewards: Rewards::default(),
            buffer_size: 16,
            update_epochs: 4,
            clip_ratio: 0.2,
            learning_rate: 0.05,
            value_learning_rate: 0.05,
            discount: 0.9,
        }
    }
}

impl RlConfig {
    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let r = &self.rewards;
        if !(r.dominate > r.improve && r.improve > r.penalty) {
            out.push("rewards must satisfy dominate > improve > penalty".into());
        }
        if self.buffer_size == 0 {
            out.push("bufferSize must be >= 1".into());
        }
        if !(self.clip_ratio > 0.0) || !(self.learning_rate > 0.0) || !(self.value_learning_rate > 0.0) {
            out.push("clipRatio and learning rates must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.discount) {
            out.push("discount must lie in [0, 1]".into());
        }
        out
    }
}

/// Fixed action layout: `(activity * 19 + scenario - 1) * slots + slot`, where
/// `slot` is the position of the delta among those derived for the same
/// (activity, scenario). Random moves use their move kind in place of the
/// scenario.
#[derive(Debug, Clone)]
pub struct ActionSpace {
    activities: Vec<String>,
    slots: usize,
}

impl ActionSpace {
    pub fn new(model: &ProcessModel, slots: usize) -> Self {
        ActionSpace { activities: model.activities.iter().map(|a| a.id.clone()).collect(), slots: slots.max(1) }
    }

    pub fn len(&self) -> usize {
        self.activities.len() * ALL_SCENARIOS.len() * self.slots
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, activity: usize, scenario: u8, slot: usize) -> usize {
        (activity * ALL_SCENARIOS.len() + scenario as usize - 1) * self.slots + slot
    }

    fn group_of(d: &PolicyDelta) -> Option<u8> {
        d.provenance
            .scenario
            .or_else(|| MoveKind::of(&d.provenance).map(|k| MoveKind::ALL.iter().position(|x| *x == k).unwrap_or(0) as u8 + 1))
    }

    /// Assigns each delta its action index; deltas beyond the slot count of
    /// their group are dropped.
    pub fn assign<T>(&self, items: Vec<(PolicyDelta, T)>) -> Vec<(usize, PolicyDelta, T)> {
        let mut used: HashMap<(usize, u8), usize> = HashMap::new();
        let mut out = Vec::new();
        for (d, t) in items {
            let Some(a) = self.activities.iter().position(|x| *x == d.activity_id) else { continue };
            let Some(g) = Self::group_of(&d) else { continue };
            let slot = used.entry((a, g)).or_insert(0);
            if *slot < self.slots {
                out.push((self.index(a, g, *slot), d, t));
            }
            *slot += 1;
        }
        out
    }
}

/// Per activity: mean first and last wait relative to the initial cycle time,
/// mean batch size relative to the size cap, mean utilization of eligible
/// resources, cost share. Then both objectives relative to the initial
/// solution and a constant 1.
fn extract_state(model: &ProcessModel, log: &EventLog, point: Point, initial: Point, max_size: u32) -> Vec<f64> {
    let scale = |v: f64, by: f64| if by > 0.0 { v / by } else { v };
    let mut x = Vec::with_capacity(model.activities.len() * 5 + 3);
    let stats = compute_stats(log, model).ok();
    for a in &model.activities {
        let Some(st) = stats.as_ref() else {
            x.extend([0.0; 5]);
            continue;
        };
        match st.activity(&a.id) {
            Some(s) => {
                let utils: Vec<f64> =
                    a.eligible_resources.iter().filter_map(|r| st.resource(r)).map(|r| r.utilization).collect();
                let util = if utils.is_empty() { 0.0 } else { utils.iter().sum::<f64>() / utils.len() as f64 };
                x.push(scale(s.mean_first_wait, initial.0));
                x.push(scale(s.mean_last_wait, initial.0));
                x.push(s.mean_batch_size / max_size.max(1) as f64);
                x.push(util);
                x.push(scale(s.total_cost, st.total_cost));
            }
            None => x.extend([0.0; 5]),
        }
    }
    x.push(scale(point.0, initial.0));
    x.push(scale(point.1, initial.1));
    x.push(1.0);
    x
}

struct Transition {
    state: Vec<f64>,
    action: usize,
    mask: Vec<usize>,
    old_prob: f64,
    reward: f64,
    next_state: Vec<f64>,
}

/// Linear softmax actor over the fixed action space with a linear value head.
struct Agent {
    dim: usize,
    actor: Vec<f64>,
    critic: Vec<f64>,
}

impl Agent {
    fn new(actions: usize, dim: usize) -> Self {
        Agent { dim, actor: vec![0.0; actions * dim], critic: vec![0.0; dim] }
    }

    fn logit(&self, action: usize, x: &[f64]) -> f64 {
        self.actor[action * self.dim..(action + 1) * self.dim].iter().zip(x).map(|(w, v)| w * v).sum()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.critic.iter().zip(x).map(|(w, v)| w * v).sum()
    }

    /// Probabilities over `mask` (in mask order); everything else is masked out.
    fn probs(&self, x: &[f64], mask: &[usize]) -> Vec<f64> {
        let z: Vec<f64> = mask.iter().map(|&a| self.logit(a, x)).collect();
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }

    fn train(&mut self, buffer: &[Transition], cfg: &RlConfig) {
        for _ in 0..cfg.update_epochs {
            for t in buffer {
                let v = self.value(&t.state);
                let target = t.reward + cfg.discount * self.value(&t.next_state);
                let adv = target - v;
                let p = self.probs(&t.state, &t.mask);
                let pos = t.mask.iter().position(|&a| a == t.action).expect("action is in its mask");
                let ratio = p[pos] / t.old_prob;
                let clipped = (adv > 0.0 && ratio > 1.0 + cfg.clip_ratio) || (adv < 0.0 && ratio < 1.0 - cfg.clip_ratio);
                if !clipped {
                    for (j, &a) in t.mask.iter().enumerate() {
                        let g = adv * ratio * (if j == pos { 1.0 } else { 0.0 } - p[j]);
                        let row = &mut self.actor[a * self.dim..(a + 1) * self.dim];
                        for (w, xv) in row.iter_mut().zip(&t.state) {
                            *w += cfg.learning_rate * g * xv;
                        }
                    }
                }
                for (w, xv) in self.critic.iter_mut().zip(&t.state) {
                    *w += cfg.value_learning_rate * adv * xv;
                }
            }
        }
    }
}

fn sample<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Agent walk: each step picks one available intervention of the current
/// solution, simulates it, and moves to the result whatever its reward.
pub fn optimize_rl(model: &ProcessModel, initial: &PolicySet, config: &OptimizerConfig) -> Result<OptimizationResult, OptimizerError> {
    let problems = config.problems();
    if !problems.is_empty() {
        return Err(OptimizerError::InvalidConfig(problems));
    }
    let rl = &config.rl;
    let eval = Evaluator::new(model, &config.sim_config).map_err(|e| OptimizerError::Initial(e.to_string()))?;
    let (objectives, log) = eval.evaluate(initial).map_err(OptimizerError::Initial)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(3);
    let mut move_rng = ChaCha8Rng::seed_from_u64(config.seed);
    move_rng.set_stream(2);

    let slots = config.intervention_config.lambdas.len().max(config.intervention_config.top_k).max(2);
    let space = ActionSpace::new(model, slots);
    let max_size = config.intervention_config.max_size;
    let root = Solution { id: 0, objectives, lineage: Vec::new(), policies: initial.clone(), log: Some(log) };
    let initial_point = root.point();
    let mut state = extract_state(model, root.log.as_deref().expect("root log"), initial_point, initial_point, max_size);
    let mut agent = Agent::new(space.len(), state.len());
    let mut front = ParetoFront::new();
    front.update(root.clone());
    let mut audit = vec![AuditRecord {
        iteration: 0,
        solution: 0,
        parent: None,
        provenance: None,
        point: Some(initial_point),
        distance: Some(0.0),
        accepted: true,
        enqueued: false,
        reward: None,
        error: None,
    }];
    let mut convergence = vec![convergence_point(&front, 1)];
    let mut buffer: Vec<Transition> = Vec::with_capacity(rl.buffer_size);
    let mut current = root;
    let (mut failures, mut last_error) = (0usize, None);
    let mut sims = 1usize;

    for iteration in 1..=rl.max_iterations {
        let log = current.log.clone().expect("current solution keeps its log");
        let deltas = if config.guided {
            guided_deltas(model, &current.policies, &log, config)
        } else {
            let ctx = PerturbationContext::from_log(model, &log);
            random_perturbation(&current.policies, &ctx, &mut move_rng, &config.intervention_config, config.unguided_moves.unwrap_or(5))
        };
        let available = space.assign(apply_all(model, &current.policies, deltas));
        if available.is_empty() {
            log::debug!("no interventions available at iteration {iteration}");
            break;
        }
        let mask: Vec<usize> = available.iter().map(|(a, _, _)| *a).collect();
        let probs = agent.probs(&state, &mask);
        let pick = sample(&probs, &mut rng);
        let (action, delta, policies) = available.into_iter().nth(pick).expect("sampled index in range");
        let id = sims;
        sims += 1;
        let mut rec = AuditRecord {
            iteration,
            solution: id,
            parent: Some(current.id),
            provenance: Some(delta.provenance.clone()),
            point: None,
            distance: None,
            accepted: false,
            enqueued: false,
            reward: None,
            error: None,
        };
        let (r, next) = match eval.evaluate(&policies) {
            Err(e) => {
                log::warn!("candidate {id} failed: {e}");
                failures += 1;
                rec.error = Some(e.clone());
                last_error = Some(e);
                (rl.rewards.penalty, None)
            }
            Ok((objectives, child_log)) => {
                let mut lineage = current.lineage.clone();
                lineage.push(delta.provenance);
                let child = Solution { id, objectives, lineage, policies, log: Some(child_log) };
                let p = child.point();
                let r = reward(&front, p, &rl.rewards);
                rec.point = Some(p);
                rec.distance = front.distance(p).ok();
                rec.accepted = front.update(child.clone());
                (r, Some(child))
            }
        };
        rec.reward = Some(r);
        audit.push(rec);
        convergence.push(convergence_point(&front, sims));
        let next_state = match &next {
            Some(c) => extract_state(model, c.log.as_deref().expect("child log"), c.point(), initial_point, max_size),
            None => state.clone(),
        };
        buffer.push(Transition { state: state.clone(), action, mask, old_prob: probs[pick], reward: r, next_state: next_state.clone() });
        if buffer.len() >= rl.buffer_size {
            agent.train(&buffer, rl);
            buffer.clear();
        }
        if let Some(c) = next {
            current = c;
            state = next_state;
        }
        check_failures(failures, sims - 1, &last_error)?;
    }
    Ok(OptimizationResult { front, audit, convergence, simulations: sims, failures })
}
