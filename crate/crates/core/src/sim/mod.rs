//! Seeded discrete-event simulation of a process under batching policies.

mod engine;
mod log;
mod objectives;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_model, ProcessModel, ValidationReport};
use crate::policy::{PolicyError, PolicySet};

pub use engine::Simulator;
pub use log::{BatchRecord, EventLog, InstanceRecord};
pub use objectives::{
    case_cycle_time, evaluate_objectives, evaluate_objectives_with, mean_case_cycle_time, CycleTimeMode, ObjectiveValues,
};

/// Cost setting that replaces every activity's resource cost component by
/// processing time scaled with the batch size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostScenario {
    /// `1/n * sum(p_i)` times the resource rate.
    Parallel,
    /// `0.5/n * sum(p_i)` times the resource rate.
    Hybrid,
}

impl CostScenario {
    pub fn factor(self) -> f64 {
        match self {
            CostScenario::Parallel => 1.0,
            CostScenario::Hybrid => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub seed: u64,
    /// Overrides the model's arrival count when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_cases: Option<u32>,
    /// Cases (by arrival order) excluded from objective values.
    #[serde(default)]
    pub warmup: u32,
    #[serde(default)]
    pub cycle_time_mode: CycleTimeMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_scenario: Option<CostScenario>,
    #[serde(default = "default_max_events")]
    pub max_events: u64,
}

fn default_max_events() -> u64 {
    20_000_000
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            total_cases: None,
            warmup: 0,
            cycle_time_mode: CycleTimeMode::Full,
            cost_scenario: None,
            max_events: default_max_events(),
        }
    }
}

impl SimConfig {
    pub fn with_seed(seed: u64) -> Self {
        SimConfig { seed, ..Default::default() }
    }

    pub fn cases(&self, model: &ProcessModel) -> u32 {
        self.total_cases.unwrap_or(model.arrival.total_cases)
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("model failed validation: {0}")]
    InvalidModel(ValidationReport),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("simulation config invalid: {0}")]
    InvalidConfig(String),
    #[error("no eligible resource of activity `{0}` is ever available")]
    NoResource(String),
    #[error("arrival calendar never opens")]
    NoArrivals,
    #[error("event limit of {0} exceeded")]
    EventLimit(u64),
    #[error("event log is empty")]
    EmptyLog,
    #[error("case {0} not in log")]
    UnknownCase(u32),
    #[error("event log format: {0}")]
    LogFormat(String),
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub log: EventLog,
    pub objectives: ObjectiveValues,
}

/// Validates the inputs and runs one simulation.
pub fn simulate(model: &ProcessModel, policies: &PolicySet, config: &SimConfig) -> Result<SimOutput, SimError> {
    let report = validate_model(model);
    if !report.is_valid() {
        return Err(SimError::InvalidModel(report));
    }
    Simulator::new(model, config.clone())?.run(policies)
}
