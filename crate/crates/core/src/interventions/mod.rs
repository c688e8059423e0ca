//! Policy edits prescribed by the detected scenarios.

mod apply;
mod derive;
mod formulas;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::{BatchType, Condition, ConditionLocator};
use crate::time::{Seconds, Slot};

pub use apply::apply_delta;
pub use derive::{derive_interventions, scenario_direction, SizeDirection};
pub use formulas::{
    build_schedule_set, compute_window_aligned_thresholds, compute_wt_first_threshold, compute_wt_last_threshold,
    round_half_up, scale_size_threshold, window_aligned_waits,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct InterventionConfig {
    /// Scaling factors; each scenario uses the ones matching its direction.
    pub lambdas: Vec<f64>,
    pub min_size: u32,
    pub max_size: u32,
    /// Number of (weekday, hour) pairs in a derived schedule.
    pub top_k: usize,
}

impl Default for InterventionConfig {
    fn default() -> Self {
        InterventionConfig { lambdas: vec![0.5, 0.8, 1.25, 2.0], min_size: 1, max_size: 50, top_k: 3 }
    }
}

impl InterventionConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            out.push("lambda values must be finite and > 0".into());
        }
        if self.min_size < 1 || self.max_size < self.min_size {
            out.push("sizes must satisfy 1 <= minSize <= maxSize".into());
        }
        if self.top_k == 0 {
            out.push("topK must be >= 1".into());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupTarget {
    Index(usize),
    New,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DeltaChange {
    /// Adds a condition to a group (replacing one of the same kind) or as a new group.
    AddCondition { group: GroupTarget, condition: Condition },
    ReplaceThreshold { locator: ConditionLocator, value: i64 },
    /// Adds one `{week-day = d} and {daily-hour = h}` group per pair.
    AddSchedule { pairs: Vec<Slot> },
    /// Conjoins every unscheduled group with each pair (one group per
    /// combination); on an empty rule, behaves like `AddSchedule`.
    ConstrainSchedule { pairs: Vec<Slot> },
    /// Sets every size threshold, or adds a size group when none exists.
    ScaleSize { threshold: u32 },
    /// Sets (or adds as new groups) both waiting-time thresholds.
    AlignWaitThresholds { first: Seconds, last: Seconds },
    SetBatchType { batch_type: BatchType },
}

/// Where a delta came from: a scenario (guided) or a random move (unguided).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_move: Option<String>,
}

impl Provenance {
    pub fn scenario(id: u8, lambda: Option<f64>) -> Self {
        Provenance { scenario: Some(id), lambda, random_move: None }
    }

    pub fn random(kind: &str, lambda: Option<f64>) -> Self {
        Provenance { scenario: None, lambda, random_move: Some(kind.to_string()) }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.scenario, &self.random_move) {
            (Some(s), _) => write!(f, "S{s}")?,
            (None, Some(m)) => write!(f, "random:{m}")?,
            (None, None) => write!(f, "manual")?,
        }
        if let Some(l) = self.lambda {
            write!(f, " lambda={l}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PolicyDelta {
    pub activity_id: String,
    pub change: DeltaChange,
    pub provenance: Provenance,
}

#[derive(Debug, Error)]
pub enum InterventionError {
    #[error("input list is empty")]
    EmptyInput,
    #[error("histogram has no mass")]
    EmptyHistogram,
    #[error("activity `{0}` has no batches in the log")]
    NoBatches(String),
    #[error("no availability window of activity `{0}` fits the batch within the search horizon")]
    NoFittingWindow(String),
    #[error("unknown activity `{0}`")]
    UnknownActivity(String),
    #[error("scenario {scenario} does not apply to activity `{activity}`: {reason}")]
    Mismatch { scenario: u8, activity: String, reason: String },
    #[error("delta cannot be applied: {0}")]
    InvalidDelta(String),
}
