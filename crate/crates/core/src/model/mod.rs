//! Process model: activities, gateways, flow arcs, resources, arrivals.

mod calendar;
mod distribution;
mod graph;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use calendar::{Calendar, CalendarInterval, WindowIter};
pub use distribution::DurationDistribution;
pub use graph::{ModelGraph, NodeKind};
pub use validate::{validate_model, ValidationReport, Violation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProcessModel {
    pub activities: Vec<Activity>,
    #[serde(default)]
    pub gateways: Vec<Gateway>,
    pub arcs: Vec<FlowArc>,
    pub resources: Vec<ResourceProfile>,
    pub arrival: ArrivalModel,
    pub start_node: String,
    pub end_nodes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Activity {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub duration: DurationDistribution,
    pub eligible_resources: Vec<String>,
    #[serde(default)]
    pub fixed_cost_per_execution: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GatewayKind {
    AndSplit,
    AndJoin,
    XorSplit,
    XorJoin,
    OrSplit,
    OrJoin,
}

impl GatewayKind {
    pub fn is_split(self) -> bool {
        matches!(self, GatewayKind::AndSplit | GatewayKind::XorSplit | GatewayKind::OrSplit)
    }

    pub fn is_join(self) -> bool {
        !self.is_split()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Gateway {
    pub id: String,
    pub kind: GatewayKind,
    /// Arc id to probability. Only meaningful for XOR and OR splits.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub branch_probabilities: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowArc {
    pub id: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ResourceProfile {
    pub id: String,
    pub calendar: Calendar,
    /// Money per hour of occupation.
    #[serde(default)]
    pub cost_per_hour: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ArrivalModel {
    /// Inter-arrival time, measured in open time of the arrival calendar.
    pub inter_arrival: DurationDistribution,
    pub calendar: Calendar,
    pub total_cases: u32,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model document invalid at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("model failed validation: {0}")]
    Invalid(ValidationReport),
}

/// Parses a JSON model document.
pub fn parse_model(text: &str) -> Result<ProcessModel, ModelError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| ModelError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn serialize_model(model: &ProcessModel) -> String {
    serde_json::to_string_pretty(model).expect("model serializes")
}

impl ProcessModel {
    pub fn activity(&self, id: &str) -> Option<&Activity> {
        self.activities.iter().find(|a| a.id == id)
    }

    pub fn activity_index(&self, id: &str) -> Option<usize> {
        self.activities.iter().position(|a| a.id == id)
    }

    pub fn resource(&self, id: &str) -> Option<&ResourceProfile> {
        self.resources.iter().find(|r| r.id == id)
    }

    /// Eligible resources of an activity, in declaration order of the model.
    pub fn eligible_resources(&self, activity: &str) -> Vec<&ResourceProfile> {
        match self.activity(activity) {
            Some(a) => self
                .resources
                .iter()
                .filter(|r| a.eligible_resources.iter().any(|e| e == &r.id))
                .collect(),
            None => Vec::new(),
        }
    }
}
