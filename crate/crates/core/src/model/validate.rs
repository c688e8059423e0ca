use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{GatewayKind, ModelGraph, NodeKind, ProcessModel};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    /// Node, arc, resource or field the violation is about.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

/// Sorted, de-duplicated list of violations. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

struct Collector(BTreeSet<Violation>);

impl Collector {
    fn push(&mut self, subject: impl Into<String>, message: impl Into<String>) {
        self.0.insert(Violation { subject: subject.into(), message: message.into() });
    }
}

fn duplicates<'a>(ids: impl Iterator<Item = &'a str>) -> BTreeSet<&'a str> {
    let mut seen = BTreeSet::new();
    let mut dup = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            dup.insert(id);
        }
    }
    dup
}

/// Checks every structural invariant of a process model.
pub fn validate_model(model: &ProcessModel) -> ValidationReport {
    let mut out = Collector(BTreeSet::new());
    let graph = ModelGraph::build(model);

    let node_ids = model
        .activities
        .iter()
        .map(|a| a.id.as_str())
        .chain(model.gateways.iter().map(|g| g.id.as_str()));
    for d in duplicates(node_ids) {
        out.push(d, "duplicate node id");
    }
    for d in duplicates(model.arcs.iter().map(|a| a.id.as_str())) {
        out.push(d, "duplicate arc id");
    }
    for d in duplicates(model.resources.iter().map(|r| r.id.as_str())) {
        out.push(d, "duplicate resource id");
    }
    let mut pairs = BTreeMap::new();
    for arc in &model.arcs {
        *pairs.entry((arc.source.as_str(), arc.target.as_str())).or_insert(0) += 1;
        for end in [&arc.source, &arc.target] {
            if !graph.index.contains_key(end) {
                out.push(&arc.id, format!("arc references unknown node `{end}`"));
            }
        }
    }
    for ((s, t), n) in pairs {
        if n > 1 {
            out.push(format!("{s}->{t}"), "duplicate arc");
        }
    }

    // start / end events
    let is_task = |id: &str| {
        model.activities.iter().any(|a| a.id == id) || model.gateways.iter().any(|g| g.id == id)
    };
    if model.start_node.is_empty() {
        out.push("startNode", "start node id is empty");
    } else if is_task(&model.start_node) {
        out.push(&model.start_node, "start node must be an event, not an activity or gateway");
    }
    if model.end_nodes.is_empty() {
        out.push("endNodes", "no end node declared");
    }
    for e in &model.end_nodes {
        if is_task(e) {
            out.push(e, "end node must be an event, not an activity or gateway");
        }
        if *e == model.start_node {
            out.push(e, "end node coincides with the start node");
        }
    }

    // degree rules
    for (n, kind) in graph.kinds.iter().enumerate() {
        let id = &graph.ids[n];
        let outs = graph.outgoing[n].len();
        let ins = graph.incoming[n].len();
        match kind {
            NodeKind::Activity(_) => {
                if outs != 1 {
                    out.push(id, format!("activity must have exactly one outgoing arc, found {outs}"));
                }
            }
            NodeKind::Event => {
                if Some(n) == graph.start {
                    if outs != 1 {
                        out.push(id, format!("start node must have exactly one outgoing arc, found {outs}"));
                    }
                    if ins != 0 {
                        out.push(id, "start node has incoming arcs");
                    }
                } else if outs != 0 {
                    out.push(id, "end node has outgoing arcs");
                }
            }
            NodeKind::Gateway(gi, gk) => {
                let g = &model.gateways[*gi];
                if gk.is_join() {
                    if ins < 2 {
                        out.push(id, format!("join has fewer than 2 incoming arcs ({ins})"));
                    }
                    if outs != 1 {
                        out.push(id, format!("join must have exactly one outgoing arc, found {outs}"));
                    }
                } else if outs == 0 {
                    out.push(id, "split has no outgoing arcs");
                }
                let out_arc_ids: BTreeSet<&str> = graph.outgoing[n]
                    .iter()
                    .map(|&a| model.arcs[graph.arcs[a].0].id.as_str())
                    .collect();
                match gk {
                    GatewayKind::XorSplit | GatewayKind::OrSplit => {
                        for arc in &out_arc_ids {
                            if !g.branch_probabilities.contains_key(*arc) {
                                out.push(id, format!("missing branch probability for arc `{arc}`"));
                            }
                        }
                        for (arc, p) in &g.branch_probabilities {
                            if !out_arc_ids.contains(arc.as_str()) {
                                out.push(id, format!("branch probability for arc `{arc}` which is not an outgoing arc"));
                            }
                            if !p.is_finite() {
                                out.push(id, format!("branch probability for `{arc}` is not finite"));
                            }
                        }
                        if *gk == GatewayKind::XorSplit {
                            let sum: f64 = g.branch_probabilities.values().sum();
                            if (sum - 1.0).abs() > 1e-9 {
                                out.push(id, format!("XOR probabilities sum ≠ 1 (sum = {sum})"));
                            }
                            for (arc, p) in &g.branch_probabilities {
                                if *p < 0.0 {
                                    out.push(id, format!("negative probability for arc `{arc}`"));
                                }
                            }
                        } else {
                            for (arc, p) in &g.branch_probabilities {
                                if !(*p > 0.0 && *p <= 1.0) {
                                    out.push(id, format!("OR branch probability for arc `{arc}` must lie in (0, 1], got {p}"));
                                }
                            }
                        }
                    }
                    _ => {
                        if !g.branch_probabilities.is_empty() {
                            out.push(id, "branch probabilities given on a gateway that does not choose branches");
                        }
                    }
                }
            }
        }
    }

    // connectivity
    if let Some(start) = graph.start {
        let reach = graph.reachability();
        for (n, kind) in graph.kinds.iter().enumerate() {
            if n != start && !reach[start][n] {
                out.push(&graph.ids[n], "not reachable from the start node");
            }
            if let NodeKind::Activity(_) = kind {
                if !graph.ends.iter().any(|&e| reach[n][e]) {
                    out.push(&graph.ids[n], "no path to an end node");
                }
            }
        }
    }

    // activities
    for a in &model.activities {
        if a.eligible_resources.is_empty() {
            out.push(&a.id, "no eligible resource");
        }
        for r in &a.eligible_resources {
            if model.resource(r).is_none() {
                out.push(&a.id, format!("eligible resource `{r}` is not declared"));
            }
        }
        for p in a.duration.problems() {
            out.push(format!("{}.duration", a.id), p);
        }
        if !(a.fixed_cost_per_execution.is_finite() && a.fixed_cost_per_execution >= 0.0) {
            out.push(&a.id, "fixedCostPerExecution must be finite and >= 0");
        }
    }

    // resources
    for r in &model.resources {
        if r.calendar.is_empty() {
            out.push(&r.id, "calendar has no availability interval");
        }
        for iv in r.calendar.intervals() {
            if iv.start >= iv.end {
                out.push(&r.id, format!("calendar interval on {} has start >= end", iv.day));
            }
        }
        for (a, _) in r.calendar.overlapping_intervals() {
            out.push(&r.id, format!("calendar intervals overlap on {}", a.day));
        }
        if !(r.cost_per_hour.is_finite() && r.cost_per_hour >= 0.0) {
            out.push(&r.id, "costPerHour must be finite and >= 0");
        }
    }

    // arrivals
    if model.arrival.total_cases < 1 {
        out.push("arrival.totalCases", "must be at least 1");
    }
    if model.arrival.calendar.is_empty() {
        out.push("arrival.calendar", "calendar has no availability interval");
    }
    for p in model.arrival.inter_arrival.problems() {
        out.push("arrival.interArrival", p);
    }

    ValidationReport { violations: out.0.into_iter().collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::single_activity_model;
    use crate::model::{Activity, DurationDistribution, FlowArc, Gateway};
    use proptest::prelude::*;

    #[test]
    fn well_formed_single_activity_is_valid() {
        let r = validate_model(&single_activity_model(3));
        assert!(r.is_valid(), "{r}");
    }

    fn xor_model(p1: f64, p2: f64) -> ProcessModel {
        let mut m = single_activity_model(3);
        m.activities.push(Activity {
            id: "B".into(),
            name: String::new(),
            duration: DurationDistribution::fixed(60),
            eligible_resources: vec!["r1".into()],
            fixed_cost_per_execution: 0.0,
        });
        m.gateways = vec![
            Gateway {
                id: "g".into(),
                kind: GatewayKind::XorSplit,
                branch_probabilities: [("fa".to_string(), p1), ("fb".to_string(), p2)].into_iter().collect(),
            },
            Gateway { id: "j".into(), kind: GatewayKind::XorJoin, branch_probabilities: Default::default() },
        ];
        m.arcs = vec![
            FlowArc { id: "f0".into(), source: "start".into(), target: "g".into() },
            FlowArc { id: "fa".into(), source: "g".into(), target: "A".into() },
            FlowArc { id: "fb".into(), source: "g".into(), target: "B".into() },
            FlowArc { id: "fa2".into(), source: "A".into(), target: "j".into() },
            FlowArc { id: "fb2".into(), source: "B".into(), target: "j".into() },
            FlowArc { id: "fend".into(), source: "j".into(), target: "end".into() },
        ];
        m
    }

    #[test]
    fn xor_probabilities_must_sum_to_one() {
        assert!(validate_model(&xor_model(0.6, 0.4)).is_valid());
        let r = validate_model(&xor_model(0.6, 0.5));
        assert!(r.contains("XOR probabilities sum ≠ 1"), "{r}");
    }

    #[test]
    fn empty_eligible_resources_reported() {
        let mut m = single_activity_model(3);
        m.activities[0].eligible_resources.clear();
        let r = validate_model(&m);
        assert!(r.contains("no eligible resource"), "{r}");
    }

    #[test]
    fn structural_problems_reported() {
        let mut m = single_activity_model(3);
        m.arcs.push(FlowArc { id: "f3".into(), source: "A".into(), target: "ghost".into() });
        m.arcs.push(FlowArc { id: "f1".into(), source: "start".into(), target: "A".into() });
        m.arrival.total_cases = 0;
        let r = validate_model(&m);
        assert!(r.contains("unknown node `ghost`"), "{r}");
        assert!(r.contains("duplicate arc id"), "{r}");
        assert!(r.contains("duplicate arc"), "{r}");
        assert!(r.contains("must be at least 1"), "{r}");
    }

    #[test]
    fn join_needs_two_inputs() {
        let mut m = single_activity_model(1);
        m.gateways.push(Gateway { id: "j".into(), kind: GatewayKind::AndJoin, branch_probabilities: Default::default() });
        m.arcs = vec![
            FlowArc { id: "f1".into(), source: "start".into(), target: "j".into() },
            FlowArc { id: "f2".into(), source: "j".into(), target: "A".into() },
            FlowArc { id: "f3".into(), source: "A".into(), target: "end".into() },
        ];
        let r = validate_model(&m);
        assert!(r.contains("fewer than 2 incoming"), "{r}");
    }

    #[test]
    fn unreachable_activity_reported() {
        let mut m = single_activity_model(1);
        m.activities.push(Activity {
            id: "Z".into(),
            name: String::new(),
            duration: DurationDistribution::fixed(60),
            eligible_resources: vec!["r1".into()],
            fixed_cost_per_execution: 0.0,
        });
        m.arcs.push(FlowArc { id: "fz".into(), source: "Z".into(), target: "end".into() });
        let r = validate_model(&m);
        assert!(r.contains("not reachable from the start node"), "{r}");
    }

    proptest! {
        #[test]
        fn permuting_lists_keeps_violation_set(seed in 0u64..1000, p in 0.0f64..1.0) {
            let mut m = xor_model(p, 0.5);
            m.activities[1].eligible_resources.clear();
            let base = validate_model(&m);
            let mut rng = seed;
            let mut next = || { rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (rng >> 33) as usize };
            let n = m.arcs.len();
            for i in (1..n).rev() { let j = next() % (i + 1); m.arcs.swap(i, j); }
            m.activities.swap(0, next() % 2);
            m.gateways.swap(0, next() % 2);
            prop_assert_eq!(validate_model(&m), base);
        }
    }
}
