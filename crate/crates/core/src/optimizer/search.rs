use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::perturb::{random_perturbation, PerturbationContext};
use super::{
    apply_all, check_failures, convergence_point, guided_deltas, AuditRecord, Evaluator, OptimizationResult, OptimizerConfig,
    OptimizerError, Strategy,
};
use crate::model::ProcessModel;
use crate::pareto::{ParetoFront, Solution};
use crate::policy::PolicySet;

struct Entry {
    solution: Solution,
    dist: f64,
    seq: u64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Climb,
    Anneal,
}

pub(super) fn search_rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut accept = ChaCha8Rng::seed_from_u64(seed);
    accept.set_stream(1);
    let mut moves = ChaCha8Rng::seed_from_u64(seed);
    moves.set_stream(2);
    (accept, moves)
}

/// Hill climbing or simulated annealing from `initial`. Policy sets already
/// evaluated in this run are not simulated again and do not use budget.
pub fn optimize_hc_sa(model: &ProcessModel, initial: &PolicySet, config: &OptimizerConfig) -> Result<OptimizationResult, OptimizerError> {
    let problems = config.problems();
    if !problems.is_empty() {
        return Err(OptimizerError::InvalidConfig(problems));
    }
    if config.strategy == Strategy::Rl {
        return Err(OptimizerError::InvalidConfig(vec!["strategy must be hc or sa".into()]));
    }
    let eval = Evaluator::new(model, &config.sim_config).map_err(|e| OptimizerError::Initial(e.to_string()))?;
    let (objectives, log) = eval.evaluate(initial).map_err(OptimizerError::Initial)?;
    let (mut accept_rng, mut move_rng) = search_rngs(config.seed);

    let mut mode = if config.strategy == Strategy::Sa { Mode::Anneal } else { Mode::Climb };
    let mut radius = config.radius;
    let mut temp = config.initial_temperature;
    if mode == Mode::Anneal && temp < config.temp_epsilon {
        mode = Mode::Climb;
        radius = 0.0;
    }

    let root = Solution { id: 0, objectives, lineage: Vec::new(), policies: initial.clone(), log: Some(log) };
    let mut front = ParetoFront::new();
    front.update(root.clone());
    let mut audit = vec![AuditRecord {
        iteration: 0,
        solution: 0,
        parent: None,
        provenance: None,
        point: Some(root.point()),
        distance: Some(0.0),
        accepted: true,
        enqueued: true,
        reward: None,
        error: None,
    }];
    let mut convergence = vec![convergence_point(&front, 1)];
    let mut queue = vec![Entry { solution: root, dist: 0.0, seq: 0 }];
    let mut seq = 1u64;
    let mut seen: HashSet<String> = HashSet::from([initial.canonical()]);
    let mut sims = 1usize;
    let (mut failures, mut attempts, mut last_error) = (0usize, 0usize, None);
    let mut iteration = 0usize;

    while sims < config.max_solutions && !queue.is_empty() {
        iteration += 1;
        let pick = match mode {
            Mode::Climb => {
                let mut best = 0;
                for (i, e) in queue.iter().enumerate() {
                    let b = &queue[best];
                    if e.dist < b.dist || (e.dist == b.dist && e.seq < b.seq) {
                        best = i;
                    }
                }
                best
            }
            Mode::Anneal => accept_rng.random_range(0..queue.len()),
        };
        let parent = queue.remove(pick).solution;
        let log = parent.log.clone().expect("queued solutions keep their log");

        let deltas = if config.guided {
            guided_deltas(model, &parent.policies, &log, config)
        } else {
            let k = config.unguided_moves.unwrap_or_else(|| match guided_deltas(model, &parent.policies, &log, config).len() {
                0 => 5,
                n => n,
            });
            let ctx = PerturbationContext::from_log(model, &log);
            random_perturbation(&parent.policies, &ctx, &mut move_rng, &config.intervention_config, k)
        };
        let mut children: Vec<_> =
            apply_all(model, &parent.policies, deltas).into_iter().filter(|(_, p)| seen.insert(p.canonical())).collect();
        children.truncate(config.max_solutions - sims);
        let results: Vec<_> = children.par_iter().map(|(_, p)| eval.evaluate(p)).collect();

        for ((delta, policies), res) in children.into_iter().zip(results) {
            let id = sims;
            sims += 1;
            attempts += 1;
            let mut rec = AuditRecord {
                iteration,
                solution: id,
                parent: Some(parent.id),
                provenance: Some(delta.provenance.clone()),
                point: None,
                distance: None,
                accepted: false,
                enqueued: false,
                reward: None,
                error: None,
            };
            match res {
                Err(e) => {
                    log::warn!("candidate {id} failed: {e}");
                    failures += 1;
                    rec.error = Some(e.clone());
                    last_error = Some(e);
                }
                Ok((objectives, log)) => {
                    let mut lineage = parent.lineage.clone();
                    lineage.push(delta.provenance);
                    let child = Solution { id, objectives, lineage, policies, log: Some(log) };
                    let p = child.point();
                    let dist = front.distance(p).expect("front is never empty");
                    rec.point = Some(p);
                    rec.distance = Some(dist);
                    let enqueue = if dist == 0.0 {
                        rec.accepted = front.update(child.clone());
                        true
                    } else {
                        match mode {
                            Mode::Climb => dist < radius,
                            Mode::Anneal => accept_rng.random::<f64>() < (-dist / temp).exp(),
                        }
                    };
                    if enqueue {
                        queue.push(Entry { solution: child, dist, seq });
                        seq += 1;
                    }
                    rec.enqueued = enqueue;
                }
            }
            audit.push(rec);
            convergence.push(convergence_point(&front, sims));
        }
        check_failures(failures, attempts, &last_error)?;

        if mode == Mode::Anneal {
            temp *= config.cooling_factor;
            queue.retain(|e| accept_rng.random::<f64>() < (-e.dist / temp).exp());
            if temp < config.temp_epsilon {
                log::debug!("temperature {temp} below threshold at iteration {iteration}; switching to hill climbing");
                mode = Mode::Climb;
                radius = 0.0;
                queue.retain(|e| front.distance(e.solution.point()).is_ok_and(|d| d == 0.0));
            }
        }
    }
    Ok(OptimizationResult { front, audit, convergence, simulations: sims, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::single_activity_model;
    use crate::policy::{ActivationRule, BatchType, BatchingPolicy, Condition, CostModel};

    fn setup() -> (ProcessModel, PolicySet) {
        let mut m = single_activity_model(24);
        m.activities[0].fixed_cost_per_execution = 10.0;
        let ps = PolicySet::from_policies([BatchingPolicy {
            activity_id: "A".into(),
            batch_type: BatchType::Parallel,
            rule: ActivationRule::single(Condition::Size { threshold: 3 }),
            cost: CostModel::fixed(10.0),
        }]);
        (m, ps)
    }

    #[test]
    fn budget_of_one_returns_initial() {
        let (m, ps) = setup();
        let cfg = OptimizerConfig { max_solutions: 1, ..Default::default() };
        let r = optimize_hc_sa(&m, &ps, &cfg).unwrap();
        assert_eq!(r.front.len(), 1);
        assert_eq!(r.simulations, 1);
        assert_eq!(r.front.solutions()[0].policies, ps);
    }

    #[test]
    fn budget_respected_and_front_monotone() {
        let (m, ps) = setup();
        for strategy in [Strategy::Hc, Strategy::Sa] {
            for guided in [true, false] {
                let cfg = OptimizerConfig { strategy, guided, max_solutions: 12, seed: 3, ..Default::default() };
                let r = optimize_hc_sa(&m, &ps, &cfg).unwrap();
                assert!(r.simulations <= 12);
                assert_eq!(r.audit.len(), r.simulations);
                for w in r.convergence.windows(2) {
                    assert!(w[1].best_cycle_time <= w[0].best_cycle_time);
                    assert!(w[1].best_cost <= w[0].best_cost);
                }
            }
        }
    }

    #[test]
    fn cold_annealing_equals_radius_zero_climbing() {
        let (m, ps) = setup();
        for guided in [true, false] {
            let hc = OptimizerConfig { radius: 0.0, guided, max_solutions: 15, seed: 9, ..Default::default() };
            let sa = OptimizerConfig { strategy: Strategy::Sa, initial_temperature: 1e-6, ..hc.clone() };
            let a = optimize_hc_sa(&m, &ps, &hc).unwrap();
            let b = optimize_hc_sa(&m, &ps, &sa).unwrap();
            assert_eq!(a.front, b.front);
            assert_eq!(a.audit, b.audit);
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let (m, ps) = setup();
        let cfg = OptimizerConfig { strategy: Strategy::Sa, guided: false, max_solutions: 15, seed: 5, ..Default::default() };
        let a = optimize_hc_sa(&m, &ps, &cfg).unwrap();
        let b = optimize_hc_sa(&m, &ps, &cfg).unwrap();
        assert_eq!(a.front, b.front);
        assert_eq!(a.audit, b.audit);
    }
}
