//! Policy search: hill climbing / simulated annealing over a candidate queue,
//! and a reinforcement-learning agent whose actions are the interventions.

mod perturb;
mod rl;
mod search;

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{detect_scenarios, DetectionConfig};
use crate::interventions::{apply_delta, derive_interventions, InterventionConfig, PolicyDelta, Provenance};
use crate::model::ProcessModel;
use crate::pareto::{dominates, ParetoFront, Point};
use crate::policy::PolicySet;
use crate::sim::{EventLog, ObjectiveValues, SimConfig, SimError, Simulator};

pub use perturb::{random_perturbation, MoveKind, PerturbationContext};
pub use rl::{optimize_rl, ActionSpace, RlConfig, Rewards};
pub use search::optimize_hc_sa;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[serde(alias = "HC")]
    Hc,
    #[serde(alias = "SA")]
    Sa,
    #[serde(alias = "RL")]
    Rl,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Hc => "hc",
            Strategy::Sa => "sa",
            Strategy::Rl => "rl",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hc" => Ok(Strategy::Hc),
            "sa" => Ok(Strategy::Sa),
            "rl" => Ok(Strategy::Rl),
            other => Err(format!("unknown strategy `{other}` (expected hc, sa or rl)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub strategy: Strategy,
    /// Interventions from detected scenarios when true, random moves otherwise.
    pub guided: bool,
    /// Simulation budget for hill climbing and annealing, initial run included.
    pub max_solutions: usize,
    /// Hill-climbing acceptance radius in normalized objective space.
    pub radius: f64,
    pub initial_temperature: f64,
    pub cooling_factor: f64,
    /// Below this temperature annealing turns into hill climbing with radius 0.
    pub temp_epsilon: f64,
    /// Seed of the search's own random choices.
    pub seed: u64,
    /// Random moves per expansion in unguided mode; by default as many as the
    /// guided path would produce (5 when it produces none).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unguided_moves: Option<usize>,
    pub sim_config: SimConfig,
    pub detection_config: DetectionConfig,
    pub intervention_config: InterventionConfig,
    pub rl: RlConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            strategy: Strategy::Hc,
            guided: true,
            max_solutions: 100,
            radius: 0.05,
            initial_temperature: 1e9,
            cooling_factor: 0.95,
            temp_epsilon: 1e-3,
            seed: 0,
            unguided_moves: None,
            sim_config: SimConfig::default(),
            detection_config: DetectionConfig::default(),
            intervention_config: InterventionConfig::default(),
            rl: RlConfig::default(),
        }
    }
}

impl OptimizerConfig {
    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.strategy != Strategy::Rl && self.max_solutions < 1 {
            out.push("maxSolutions must be >= 1".into());
        }
        if !(self.cooling_factor > 0.0 && self.cooling_factor < 1.0) {
            out.push("coolingFactor must lie in (0, 1)".into());
        }
        if !(self.radius >= 0.0) {
            out.push("radius must be >= 0".into());
        }
        if !(self.initial_temperature >= 0.0) || !(self.temp_epsilon >= 0.0) {
            out.push("temperatures must be >= 0".into());
        }
        out.extend(self.intervention_config.problems());
        out.extend(self.rl.problems());
        out
    }
}

/// One evaluated (or failed) candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditRecord {
    pub iteration: usize,
    pub solution: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    pub accepted: bool,
    pub enqueued: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConvergencePoint {
    pub simulations: usize,
    pub best_cycle_time: f64,
    pub best_cost: f64,
    pub front_size: usize,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub front: ParetoFront,
    pub audit: Vec<AuditRecord>,
    pub convergence: Vec<ConvergencePoint>,
    pub simulations: usize,
    pub failures: usize,
}

impl OptimizationResult {
    pub fn write_audit<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.audit {
            serde_json::to_writer(&mut w, r).map_err(std::io::Error::other)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn convergence_csv(&self) -> String {
        let mut out = String::from("simulations,best_cycle_time,best_cost,front_size\n");
        for c in &self.convergence {
            out.push_str(&format!("{},{},{},{}\n", c.simulations, c.best_cycle_time, c.best_cost, c.front_size));
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid optimizer configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("initial solution failed: {0}")]
    Initial(String),
    #[error("{failures} of {attempts} candidate simulations failed; last error: {last}")]
    TooManyFailures { failures: usize, attempts: usize, last: String },
}

/// Runs the configured strategy from `initial`.
pub fn optimize(model: &ProcessModel, initial: &PolicySet, config: &OptimizerConfig) -> Result<OptimizationResult, OptimizerError> {
    match config.strategy {
        Strategy::Hc | Strategy::Sa => optimize_hc_sa(model, initial, config),
        Strategy::Rl => optimize_rl(model, initial, config),
    }
}

/// `r_dom` when `p` dominates every member, `r_imp` when the front would
/// accept it, `r_pen` otherwise.
pub fn reward(front: &ParetoFront, p: Point, rewards: &Rewards) -> f64 {
    let pts = front.points();
    if !pts.is_empty() && pts.iter().all(|&q| dominates(p, q)) {
        rewards.dominate
    } else if !front.covers(p) {
        rewards.improve
    } else {
        rewards.penalty
    }
}

pub(crate) type Evaluated = (ObjectiveValues, Arc<EventLog>);

/// Simulates policy sets under one configuration, memoizing by canonical form.
pub(crate) struct Evaluator<'m> {
    sim: Simulator<'m>,
    cache: Mutex<HashMap<String, Result<Evaluated, String>>>,
}

impl<'m> Evaluator<'m> {
    pub(crate) fn new(model: &'m ProcessModel, config: &SimConfig) -> Result<Self, SimError> {
        Ok(Evaluator { sim: Simulator::new(model, config.clone())?, cache: Mutex::new(HashMap::new()) })
    }

    pub(crate) fn evaluate(&self, policies: &PolicySet) -> Result<Evaluated, String> {
        let key = policies.canonical();
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return hit.clone();
        }
        let cfg = self.sim.config();
        let res = self
            .sim
            .run(policies)
            .and_then(|out| {
                let obj = crate::sim::evaluate_objectives_with(&out.log, cfg.warmup, cfg.cycle_time_mode)?;
                Ok((obj, Arc::new(out.log)))
            })
            .map_err(|e| e.to_string());
        self.cache.lock().expect("cache lock").insert(key, res.clone());
        res
    }
}

/// Guided neighbours of a solution: every intervention derived from the
/// scenarios detected in its log, in detection order.
pub(crate) fn guided_deltas(
    model: &ProcessModel,
    policies: &PolicySet,
    log: &EventLog,
    config: &OptimizerConfig,
) -> Vec<PolicyDelta> {
    let instances = match detect_scenarios(log, model, policies, &config.detection_config) {
        Ok(v) => v,
        Err(e) => {
            log::warn!("scenario detection failed: {e}");
            return Vec::new();
        }
    };
    let mut out = Vec::new();
    for inst in &instances {
        match derive_interventions(inst, policies, &config.intervention_config) {
            Ok(ds) => out.extend(ds),
            Err(e) => log::debug!("no interventions for S{} on {}: {e}", inst.scenario, inst.activity_id),
        }
    }
    out
}

/// Applies each delta, dropping those that fail to apply.
pub(crate) fn apply_all(model: &ProcessModel, policies: &PolicySet, deltas: Vec<PolicyDelta>) -> Vec<(PolicyDelta, PolicySet)> {
    deltas
        .into_iter()
        .filter_map(|d| match apply_delta(model, policies, &d) {
            Ok(p) => Some((d, p)),
            Err(e) => {
                log::debug!("delta {} on {} rejected: {e}", d.provenance, d.activity_id);
                None
            }
        })
        .collect()
}

pub(crate) fn convergence_point(front: &ParetoFront, simulations: usize) -> ConvergencePoint {
    let pts = front.points();
    ConvergencePoint {
        simulations,
        best_cycle_time: pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        best_cost: pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        front_size: pts.len(),
    }
}

pub(crate) fn check_failures(failures: usize, attempts: usize, last: &Option<String>) -> Result<(), OptimizerError> {
    if attempts >= 4 && failures * 2 > attempts {
        return Err(OptimizerError::TooManyFailures {
            failures,
            attempts,
            last: last.clone().unwrap_or_default(),
        });
    }
    Ok(())
}
