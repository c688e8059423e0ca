use std::collections::BTreeMap;

use super::{GatewayKind, ProcessModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Activity(usize),
    Gateway(usize, GatewayKind),
    /// Start or end event.
    Event,
}

/// Index-based view of the model's flow graph.
///
/// Activities occupy node indices `0..activities.len()`, gateways follow, and
/// the start/end events come last. Arcs whose endpoints are unknown are left
/// out; validation reports them.
#[derive(Debug, Clone)]
pub struct ModelGraph {
    pub ids: Vec<String>,
    pub kinds: Vec<NodeKind>,
    pub index: BTreeMap<String, usize>,
    /// (arc index in model, source node, target node)
    pub arcs: Vec<(usize, usize, usize)>,
    pub outgoing: Vec<Vec<usize>>,
    pub incoming: Vec<Vec<usize>>,
    pub start: Option<usize>,
    pub ends: Vec<usize>,
}

impl ModelGraph {
    pub fn build(model: &ProcessModel) -> Self {
        let mut ids = Vec::new();
        let mut kinds = Vec::new();
        let mut index = BTreeMap::new();
        let mut add = |id: &str, kind: NodeKind, ids: &mut Vec<String>, kinds: &mut Vec<NodeKind>| {
            if !index.contains_key(id) {
                index.insert(id.to_string(), ids.len());
                ids.push(id.to_string());
                kinds.push(kind);
            }
        };
        for (i, a) in model.activities.iter().enumerate() {
            add(&a.id, NodeKind::Activity(i), &mut ids, &mut kinds);
        }
        for (i, g) in model.gateways.iter().enumerate() {
            add(&g.id, NodeKind::Gateway(i, g.kind), &mut ids, &mut kinds);
        }
        add(&model.start_node, NodeKind::Event, &mut ids, &mut kinds);
        for e in &model.end_nodes {
            add(e, NodeKind::Event, &mut ids, &mut kinds);
        }
        let n = ids.len();
        let mut outgoing = vec![Vec::new(); n];
        let mut incoming = vec![Vec::new(); n];
        let mut arcs = Vec::new();
        for (ai, arc) in model.arcs.iter().enumerate() {
            if let (Some(&s), Some(&t)) = (index.get(&arc.source), index.get(&arc.target)) {
                outgoing[s].push(arcs.len());
                incoming[t].push(arcs.len());
                arcs.push((ai, s, t));
            }
        }
        let start = index.get(&model.start_node).copied();
        let ends = model.end_nodes.iter().filter_map(|e| index.get(e).copied()).collect();
        ModelGraph { ids, kinds, index, arcs, outgoing, incoming, start, ends }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// `reach[n][m]` is true when `m` is reachable from `n` through one or more arcs.
    pub fn reachability(&self) -> Vec<Vec<bool>> {
        let n = self.len();
        let mut reach = vec![vec![false; n]; n];
        for (src, row) in reach.iter_mut().enumerate() {
            let mut stack: Vec<usize> = self.outgoing[src].iter().map(|&a| self.arcs[a].2).collect();
            while let Some(v) = stack.pop() {
                if row[v] {
                    continue;
                }
                row[v] = true;
                stack.extend(self.outgoing[v].iter().map(|&a| self.arcs[a].2));
            }
        }
        reach
    }
}
