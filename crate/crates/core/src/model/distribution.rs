use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::time::Seconds;

/// Duration distribution in seconds. Samples are rounded to whole seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DurationDistribution {
    Fixed { value: f64 },
    Uniform { min: f64, max: f64 },
    Exponential { mean: f64 },
    /// Normal distribution truncated at zero by resampling.
    NormalTruncated { mean: f64, std: f64 },
}

impl DurationDistribution {
    pub fn fixed(value: Seconds) -> Self {
        DurationDistribution::Fixed { value: value as f64 }
    }

    /// Parameter problems, if any.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let finite = |v: f64| v.is_finite();
        match *self {
            DurationDistribution::Fixed { value } => {
                if !finite(value) || value < 0.0 {
                    out.push(format!("fixed duration {value} must be finite and >= 0"));
                }
            }
            DurationDistribution::Uniform { min, max } => {
                if !finite(min) || !finite(max) || min < 0.0 || max < min {
                    out.push(format!("uniform bounds [{min}, {max}] must satisfy 0 <= min <= max"));
                }
            }
            DurationDistribution::Exponential { mean } => {
                if !finite(mean) || mean <= 0.0 {
                    out.push(format!("exponential mean {mean} must be > 0"));
                }
            }
            DurationDistribution::NormalTruncated { mean, std } => {
                if !finite(mean) || !finite(std) || std < 0.0 || (mean <= 0.0 && std == 0.0) {
                    out.push(format!("normal-truncated (mean {mean}, std {std}) must have std >= 0 and positive mass"));
                }
            }
        }
        out
    }

    pub fn mean_hint(&self) -> f64 {
        match *self {
            DurationDistribution::Fixed { value } => value,
            DurationDistribution::Uniform { min, max } => 0.5 * (min + max),
            DurationDistribution::Exponential { mean } => mean,
            DurationDistribution::NormalTruncated { mean, .. } => mean.max(0.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Seconds {
        let raw = match *self {
            DurationDistribution::Fixed { value } => value,
            DurationDistribution::Uniform { min, max } => {
                if max > min {
                    rng.random_range(min..max)
                } else {
                    min
                }
            }
            DurationDistribution::Exponential { mean } => Exp::new(1.0 / mean)
                .map(|d| d.sample(rng))
                .unwrap_or(0.0),
            DurationDistribution::NormalTruncated { mean, std } => match Normal::new(mean, std) {
                Ok(d) => {
                    let mut v = d.sample(rng);
                    let mut tries = 0;
                    while v < 0.0 && tries < 64 {
                        v = d.sample(rng);
                        tries += 1;
                    }
                    v.max(0.0)
                }
                Err(_) => mean.max(0.0),
            },
        };
        raw.max(0.0).round() as Seconds
    }
}
