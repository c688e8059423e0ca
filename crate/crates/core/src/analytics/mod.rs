//! Log statistics and detection of the nineteen batching inefficiency scenarios.

mod detect;
mod stats;

use thiserror::Error;

pub use detect::{detect_scenarios, detect_with_stats, DetectionConfig, Evidence, ScenarioInstance, ALL_SCENARIOS};
pub use stats::{compute_stats, percentile, ActivityStats, AllocationVariability, LogStats, ResourceStats, SlotHistogram};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("event log is empty")]
    EmptyLog,
}
