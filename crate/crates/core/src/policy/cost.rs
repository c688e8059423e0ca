use serde::{Deserialize, Serialize};

use super::PolicyError;
use crate::model::ResourceProfile;
use crate::time::{Seconds, HOUR};

/// How the resource component of a batch cost is computed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ResourceCostMode {
    /// Resource hourly rate times the batch's wall-clock occupation.
    #[default]
    PerTime,
    /// `factor / n * sum(p_i)` hours times `ratePerHour`, where `p_i` excludes
    /// calendar pauses. `factor = 1` amortizes processing across the batch,
    /// `factor = 0.5` is the hybrid setting.
    #[serde(rename_all = "camelCase")]
    ProcessingScaled { factor: f64, rate_per_hour: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    /// Fixed cost per batch.
    #[serde(default)]
    pub fixed: f64,
    /// `(batch size, money)` points, sizes strictly increasing; linearly
    /// interpolated, flat outside the table.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variable: Vec<(u32, f64)>,
    #[serde(default)]
    pub resource: ResourceCostMode,
}

impl CostModel {
    pub fn fixed(amount: f64) -> Self {
        CostModel { fixed: amount, ..Default::default() }
    }

    pub fn variable_cost(&self, size: usize) -> f64 {
        let t = &self.variable;
        let Some(first) = t.first() else { return 0.0 };
        let n = size as f64;
        if n <= first.0 as f64 {
            return first.1;
        }
        for w in t.windows(2) {
            let (s0, c0) = (w[0].0 as f64, w[0].1);
            let (s1, c1) = (w[1].0 as f64, w[1].1);
            if n <= s1 {
                return c0 + (c1 - c0) * (n - s0) / (s1 - s0);
            }
        }
        t[t.len() - 1].1
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.fixed.is_finite() && self.fixed >= 0.0) {
            out.push("fixed cost must be finite and >= 0".to_string());
        }
        for w in self.variable.windows(2) {
            if w[1].0 <= w[0].0 {
                out.push("variable cost sizes must be strictly increasing".to_string());
                break;
            }
        }
        if self.variable.iter().any(|(_, c)| !(c.is_finite() && *c >= 0.0)) {
            out.push("variable cost values must be finite and >= 0".to_string());
        }
        if let ResourceCostMode::ProcessingScaled { factor, rate_per_hour } = self.resource {
            if !(factor.is_finite() && factor >= 0.0 && rate_per_hour.is_finite() && rate_per_hour >= 0.0) {
                out.push("processing-scaled factor and rate must be finite and >= 0".to_string());
            }
        }
        out
    }
}

/// Batch execution cost: fixed + variable(size) + resource component.
pub fn compute_batch_cost(
    batch_size: usize,
    processing_times: &[Seconds],
    busy_duration: Seconds,
    resource: &ResourceProfile,
    cost: &CostModel,
) -> Result<f64, PolicyError> {
    if batch_size == 0 || batch_size != processing_times.len() {
        return Err(PolicyError::SizeMismatch { size: batch_size, times: processing_times.len() });
    }
    let resource_part = match cost.resource {
        ResourceCostMode::PerTime => resource.cost_per_hour * busy_duration.max(0) as f64 / HOUR as f64,
        ResourceCostMode::ProcessingScaled { factor, rate_per_hour } => {
            let total: Seconds = processing_times.iter().sum();
            factor / batch_size as f64 * (total as f64 / HOUR as f64) * rate_per_hour
        }
    };
    Ok(cost.fixed + cost.variable_cost(batch_size) + resource_part)
}
