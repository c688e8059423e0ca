//! Non-dominated solution sets over (average cycle time, average cost).

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interventions::Provenance;
use crate::policy::PolicySet;
use crate::sim::{EventLog, ObjectiveValues};

/// `(avg cycle time, avg cost)`, both minimized.
pub type Point = (f64, f64);

#[derive(Debug, Error)]
pub enum ParetoError {
    #[error("front is empty")]
    EmptyFront,
    #[error("front document: {0}")]
    Format(String),
}

/// `a` is no worse than `b` on both axes and strictly better on one.
pub fn dominates(a: Point, b: Point) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Solution {
    /// Index of the simulation that produced this solution (0 = initial).
    pub id: usize,
    pub objectives: ObjectiveValues,
    /// Deltas applied on the way from the initial policy set, oldest first.
    pub lineage: Vec<Provenance>,
    pub policies: PolicySet,
    #[serde(skip)]
    pub log: Option<Arc<EventLog>>,
}

impl Solution {
    pub fn point(&self) -> Point {
        self.objectives.point()
    }
}

impl PartialEq for Solution {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.objectives == other.objectives && self.lineage == other.lineage && self.policies == other.policies
    }
}

/// Mutually non-dominated solutions, sorted by cycle time ascending.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    solutions: Vec<Solution>,
}

impl ParetoFront {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solutions(&self) -> &[Solution] {
        &self.solutions
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn points(&self) -> Vec<Point> {
        self.solutions.iter().map(|s| s.point()).collect()
    }

    /// Whether `p` would be rejected: dominated by, or equal to, a member.
    pub fn covers(&self, p: Point) -> bool {
        self.solutions.iter().any(|s| {
            let q = s.point();
            dominates(q, p) || q == p
        })
    }

    /// Inserts `candidate` unless a member dominates or ties it; evicts the
    /// members it dominates.
    pub fn update(&mut self, candidate: Solution) -> bool {
        let p = candidate.point();
        if self.covers(p) {
            return false;
        }
        self.solutions.retain(|s| !dominates(p, s.point()));
        let at = self.solutions.partition_point(|s| {
            let q = s.point();
            q.0 < p.0 || (q.0 == p.0 && q.1 < p.1)
        });
        self.solutions.insert(at, candidate);
        true
    }

    /// 0 when `p` is not dominated by any member; otherwise the smallest
    /// Euclidean distance to a member after dividing each axis by the
    /// front's maximum on that axis (axes whose maximum is 0 stay raw).
    pub fn distance(&self, p: Point) -> Result<f64, ParetoError> {
        if self.solutions.is_empty() {
            return Err(ParetoError::EmptyFront);
        }
        if !self.solutions.iter().any(|s| dominates(s.point(), p)) {
            return Ok(0.0);
        }
        let pts = self.points();
        let scale = |m: f64| if m > 0.0 { m } else { 1.0 };
        let mx = scale(pts.iter().map(|q| q.0).fold(0.0, f64::max));
        let my = scale(pts.iter().map(|q| q.1).fold(0.0, f64::max));
        Ok(pts
            .iter()
            .map(|q| ((p.0 - q.0) / mx).hypot((p.1 - q.1) / my))
            .fold(f64::INFINITY, f64::min))
    }

    pub fn write_json<W: Write>(&self, w: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(std::io::Error::other)
    }

    pub fn from_json(text: &str) -> Result<Self, ParetoError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut front: ParetoFront =
            serde_path_to_error::deserialize(de).map_err(|e| ParetoError::Format(format!("{}: {}", e.path(), e.inner())))?;
        let mut solutions = std::mem::take(&mut front.solutions);
        solutions.sort_by(|a, b| a.point().partial_cmp(&b.point()).unwrap_or(std::cmp::Ordering::Equal));
        for s in solutions {
            front.update(s);
        }
        Ok(front)
    }

    /// `avg_cycle_time,avg_cost` rows, one per solution, in front order.
    pub fn points_csv(&self) -> String {
        let mut out = String::from("avg_cycle_time,avg_cost\n");
        for (x, y) in self.points() {
            out.push_str(&format!("{x},{y}\n"));
        }
        out
    }
}

/// Free-function form of [`ParetoFront::update`].
pub fn update_front(front: &ParetoFront, candidate: Solution) -> (ParetoFront, bool) {
    let mut f = front.clone();
    let accepted = f.update(candidate);
    (f, accepted)
}

/// Free-function form of [`ParetoFront::distance`].
pub fn distance_to_front(front: &ParetoFront, p: Point) -> Result<f64, ParetoError> {
    front.distance(p)
}
