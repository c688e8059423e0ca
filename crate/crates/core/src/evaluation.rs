//! Front quality metrics against a reference front built from several runs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ProcessModel;
use crate::pareto::{dominates, ParetoFront, Point, Solution};
use crate::sim::{mean_case_cycle_time, EventLog, SimConfig, SimError, Simulator};

/// Per-axis tolerance for treating two points as the same.
pub const POINT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("no runs given")]
    NoRuns,
    #[error("point set `{0}` is empty")]
    EmptySet(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FrontPointSet {
    pub label: String,
    pub points: Vec<Point>,
}

impl FrontPointSet {
    pub fn new(label: impl Into<String>, points: Vec<Point>) -> Self {
        FrontPointSet { label: label.into(), points }
    }

    pub fn from_front(label: impl Into<String>, front: &ParetoFront) -> Self {
        Self::new(label, front.points())
    }
}

fn same(a: Point, b: Point) -> bool {
    (a.0 - b.0).abs() <= POINT_TOLERANCE && (a.1 - b.1).abs() <= POINT_TOLERANCE
}

/// Non-dominated points of `points`, duplicates collapsed, sorted.
pub fn non_dominated(points: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    for &p in points {
        if points.iter().any(|&q| dominates(q, p)) || out.iter().any(|&q| same(q, p)) {
            continue;
        }
        out.push(p);
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    out
}

pub fn build_reference_front(runs: &[FrontPointSet]) -> Result<FrontPointSet, EvaluationError> {
    if runs.is_empty() {
        return Err(EvaluationError::NoRuns);
    }
    let all: Vec<Point> = runs.iter().flat_map(|r| r.points.iter().copied()).collect();
    Ok(FrontPointSet::new("reference", non_dominated(&all)))
}

/// Mean of the two directed RMS nearest-neighbour distances, in raw units.
pub fn averaged_hausdorff(approx: &FrontPointSet, reference: &FrontPointSet) -> Result<f64, EvaluationError> {
    for s in [approx, reference] {
        if s.points.is_empty() {
            return Err(EvaluationError::EmptySet(s.label.clone()));
        }
    }
    let directed = |a: &[Point], b: &[Point]| {
        let sum: f64 = a
            .iter()
            .map(|x| b.iter().map(|y| (x.0 - y.0).powi(2) + (x.1 - y.1).powi(2)).fold(f64::INFINITY, f64::min))
            .sum();
        (sum / a.len() as f64).sqrt()
    };
    Ok(0.5 * (directed(&approx.points, &reference.points) + directed(&reference.points, &approx.points)))
}

/// Share of `approx` points that appear in `reference`.
pub fn purity(approx: &FrontPointSet, reference: &FrontPointSet) -> Result<f64, EvaluationError> {
    if approx.points.is_empty() {
        return Err(EvaluationError::EmptySet(approx.label.clone()));
    }
    let hits = approx.points.iter().filter(|&&p| reference.points.iter().any(|&q| same(p, q))).count();
    Ok(hits as f64 / approx.points.len() as f64)
}

/// Every point of `b` is dominated by or equal to a point of `a`.
pub fn weakly_dominates_set(a: &[Point], b: &[Point]) -> bool {
    b.iter().all(|&q| a.iter().any(|&p| dominates(p, q) || same(p, q)))
}

/// Mean per-case cycle time of the initial log minus the best mean over
/// `logs`; negative when every solution is slower.
pub fn cycle_time_gain(initial: &EventLog, logs: &[&EventLog], warmup: u32) -> Result<f64, EvaluationError> {
    if logs.is_empty() {
        return Ok(0.0);
    }
    let base = mean_case_cycle_time(initial, warmup)?;
    let mut best = f64::INFINITY;
    for l in logs {
        best = best.min(mean_case_cycle_time(l, warmup)?);
    }
    Ok(base - best)
}

/// [`cycle_time_gain`] over solutions, re-simulating those without a log.
pub fn cycle_time_gain_of(
    model: &ProcessModel,
    initial: &EventLog,
    solutions: &[Solution],
    config: &SimConfig,
) -> Result<f64, EvaluationError> {
    let sim = Simulator::new(model, config.clone())?;
    let mut owned = Vec::new();
    for s in solutions.iter().filter(|s| s.log.is_none()) {
        owned.push(sim.run(&s.policies)?.log);
    }
    let mut logs: Vec<&EventLog> = solutions.iter().filter_map(|s| s.log.as_deref()).collect();
    logs.extend(owned.iter());
    cycle_time_gain(initial, &logs, config.warmup)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsRow {
    pub label: String,
    pub points: usize,
    pub averaged_hausdorff: f64,
    pub purity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_time_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsTable {
    pub reference: FrontPointSet,
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,points,averaged_hausdorff,purity,cycle_time_gain\n");
        for r in &self.rows {
            let gain = r.cycle_time_gain.map(|g| g.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{},{}\n", r.label, r.points, r.averaged_hausdorff, r.purity, gain));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<24} {:>6} {:>18} {:>8} {:>14}\n", "run", "points", "avg-hausdorff", "purity", "ct-gain");
        for r in &self.rows {
            let gain = r.cycle_time_gain.map(|g| format!("{g:.3}")).unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{:<24} {:>6} {:>18.6} {:>8.4} {:>14}\n",
                r.label, r.points, r.averaged_hausdorff, r.purity, gain
            ));
        }
        out
    }
}

/// One run to compare, with whether it used guided moves and its gain if known.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub front: FrontPointSet,
    pub guided: Option<bool>,
    pub cycle_time_gain: Option<f64>,
}

/// Metrics of every run against the joint reference front, followed by the
/// `++` (union of guided runs) and `--` (union of unguided runs) rows when
/// both kinds are present.
pub fn compare_runs(runs: &[RunSummary]) -> Result<MetricsTable, EvaluationError> {
    let sets: Vec<FrontPointSet> = runs.iter().map(|r| r.front.clone()).collect();
    let reference = build_reference_front(&sets)?;
    let row = |label: &str, set: &FrontPointSet, gain: Option<f64>| -> Result<MetricsRow, EvaluationError> {
        Ok(MetricsRow {
            label: label.to_string(),
            points: set.points.len(),
            averaged_hausdorff: averaged_hausdorff(set, &reference)?,
            purity: purity(set, &reference)?,
            cycle_time_gain: gain,
        })
    };
    let mut rows = Vec::new();
    for r in runs {
        rows.push(row(&r.front.label, &r.front, r.cycle_time_gain)?);
    }
    let union = |guided: bool| {
        let pts: Vec<Point> =
            runs.iter().filter(|r| r.guided == Some(guided)).flat_map(|r| r.front.points.iter().copied()).collect();
        non_dominated(&pts)
    };
    let (plus, minus) = (union(true), union(false));
    if !plus.is_empty() && !minus.is_empty() {
        rows.push(row("++", &FrontPointSet::new("++", plus), None)?);
        rows.push(row("--", &FrontPointSet::new("--", minus), None)?);
    }
    Ok(MetricsTable { reference, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::BatchType;
    use crate::sim::{BatchRecord, InstanceRecord};
    use crate::time::HOUR;
    use proptest::prelude::*;

    fn set(points: &[Point]) -> FrontPointSet {
        FrontPointSet::new("t", points.to_vec())
    }

    #[test]
    fn reference_front_examples() {
        let one = build_reference_front(&[set(&[(1.0, 5.0), (3.0, 6.0)])]).unwrap();
        assert_eq!(one.points, vec![(1.0, 5.0)]);
        let inc = build_reference_front(&[set(&[(1.0, 5.0)]), set(&[(5.0, 1.0)])]).unwrap();
        assert_eq!(inc.points, vec![(1.0, 5.0), (5.0, 1.0)]);
        let dom = build_reference_front(&[set(&[(1.0, 5.0), (3.0, 3.0)]), set(&[(2.0, 2.0)])]).unwrap();
        assert_eq!(dom.points, vec![(1.0, 5.0), (2.0, 2.0)]);
        assert!(build_reference_front(&[]).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        let a = set(&[(0.0, 0.0)]);
        assert_eq!(averaged_hausdorff(&a, &a).unwrap(), 0.0);
        assert!((averaged_hausdorff(&a, &set(&[(3.0, 4.0)])).unwrap() - 5.0).abs() < 1e-12);
        // Directed terms: sqrt((0 + 25) / 2) and 0.
        let expect = 0.5 * (25.0f64 / 2.0).sqrt();
        let got = averaged_hausdorff(&set(&[(0.0, 0.0), (3.0, 4.0)]), &a).unwrap();
        assert!((got - expect).abs() < 1e-12);
        assert!((got - 1.7678).abs() < 1e-4);
        assert!(averaged_hausdorff(&set(&[]), &a).is_err());
    }

    #[test]
    fn purity_examples() {
        let r = set(&[(1.0, 5.0), (2.0, 2.0), (5.0, 1.0)]);
        assert_eq!(purity(&set(&[(1.0, 5.0), (2.0, 2.0)]), &r).unwrap(), 1.0);
        assert_eq!(purity(&set(&[(9.0, 9.0)]), &r).unwrap(), 0.0);
        assert_eq!(purity(&set(&[(1.0, 5.0), (2.0, 2.0), (7.0, 7.0), (8.0, 8.0)]), &r).unwrap(), 0.5);
        assert!(purity(&set(&[]), &r).is_err());
    }

    fn log_with(cycle: &[i64]) -> EventLog {
        let mut log = EventLog::default();
        for (i, &c) in cycle.iter().enumerate() {
            log.records.push(InstanceRecord {
                case_id: i as u32,
                activity: "A".into(),
                resource: "r".into(),
                enable_time: 0,
                start_time: 0,
                end_time: c,
                batch_id: i as u64,
                cost: 0.0,
                work: c,
            });
            log.batches.push(BatchRecord {
                batch_id: i as u64,
                activity: "A".into(),
                resource: "r".into(),
                batch_type: BatchType::Parallel,
                ready_time: 0,
                start_time: 0,
                end_time: c,
                cost: 0.0,
                members: vec![i],
            });
        }
        log
    }

    #[test]
    fn gain_examples() {
        let init = log_with(&[3 * HOUR, 5 * HOUR]);
        assert_eq!(cycle_time_gain(&init, &[&init], 0).unwrap(), 0.0);
        let faster = log_with(&[2 * HOUR, 4 * HOUR]);
        assert_eq!(cycle_time_gain(&init, &[&faster, &init], 0).unwrap(), HOUR as f64);
        let slower = log_with(&[4 * HOUR, 6 * HOUR]);
        assert_eq!(cycle_time_gain(&init, &[&slower], 0).unwrap(), -(HOUR as f64));
    }

    #[test]
    fn comparison_rows() {
        let runs = vec![
            RunSummary { front: FrontPointSet::new("g", vec![(1.0, 2.0)]), guided: Some(true), cycle_time_gain: None },
            RunSummary { front: FrontPointSet::new("u", vec![(1.0, 2.0)]), guided: Some(false), cycle_time_gain: None },
        ];
        let t = compare_runs(&runs).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert!(t.rows.iter().all(|r| r.averaged_hausdorff == 0.0 && r.purity == 1.0));
        assert!(t.to_csv().starts_with("label,points,averaged_hausdorff,purity,cycle_time_gain\n"));
    }

    fn pts() -> impl Strategy<Value = Vec<Point>> {
        prop::collection::vec((0u8..10, 0u8..10).prop_map(|(a, b)| (a as f64, b as f64)), 1..8)
    }

    proptest! {
        #[test]
        fn hausdorff_symmetric_and_zero_iff_equal(a in pts(), b in pts()) {
            let (sa, sb) = (set(&a), set(&b));
            let d1 = averaged_hausdorff(&sa, &sb).unwrap();
            let d2 = averaged_hausdorff(&sb, &sa).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-12);
            let mut ua = a.clone();
            ua.sort_by(|x, y| x.partial_cmp(y).unwrap());
            ua.dedup();
            let mut ub = b.clone();
            ub.sort_by(|x, y| x.partial_cmp(y).unwrap());
            ub.dedup();
            prop_assert_eq!(d1 == 0.0, ua == ub);
        }

        #[test]
        fn reference_front_idempotent_and_order_free(a in pts(), b in pts()) {
            let r1 = build_reference_front(&[set(&a), set(&b)]).unwrap();
            let r2 = build_reference_front(&[set(&b), set(&a)]).unwrap();
            prop_assert_eq!(&r1.points, &r2.points);
            let again = build_reference_front(std::slice::from_ref(&r1)).unwrap();
            prop_assert_eq!(&again.points, &r1.points);
        }

        #[test]
        fn purity_counts_survivors(a in pts(), b in pts()) {
            let r = build_reference_front(&[set(&a), set(&b)]).unwrap();
            let survivors = a.iter().filter(|p| r.points.contains(p)).count();
            let got = purity(&set(&a), &r).unwrap();
            prop_assert!((got - survivors as f64 / a.len() as f64).abs() < 1e-12);
        }
    }
}
