//! Shortest paths over the topological graph and image-space localization.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::nav::graph::TopoGraph;
use crate::policy::net::{scale_obs, scale_stack, Policy};
use crate::sim::sensor::Observation;

/// Heap entry ordered so the smallest (cost, node) pops first; ties break on
/// the lower node index, keeping expansions deterministic.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A subgoal route through the graph along stored edges, with its total
/// planned cost.
#[derive(Debug, Clone, PartialEq)]
pub struct NavPlan {
    /// Node sequence including both endpoints.
    pub nodes: Vec<usize>,
    /// Sum of traversed edge weights.
    pub cost: f64,
}

/// Dijkstra from `start` to `goal`; equal-cost alternatives resolve to the
/// smallest predecessor index. `Unreachable` if no edge path exists.
pub fn shortest_path(graph: &TopoGraph, start: usize, goal: usize) -> Result<NavPlan> {
    let n = graph.nodes.len();
    if start >= n || goal >= n {
        return Err(Error::InvalidArg(format!(
            "node out of range: start={start}, goal={goal}, nodes={n}"
        )));
    }
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for edge in &graph.edges {
        adjacency[edge.from].push((edge.to, edge.weight));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[start] = 0.0;
    heap.push(Entry { cost: 0.0, node: start });
    while let Some(Entry { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        if node == goal {
            break;
        }
        for &(next, weight) in &adjacency[node] {
            let candidate = cost + weight;
            if candidate + 1e-15 < dist[next] {
                dist[next] = candidate;
                prev[next] = node;
                heap.push(Entry { cost: candidate, node: next });
            }
        }
    }
    if !dist[goal].is_finite() {
        return Err(Error::Unreachable);
    }
    let mut path = vec![goal];
    let mut at = goal;
    while at != start {
        at = prev[at];
        path.push(at);
    }
    path.reverse();
    Ok(NavPlan {
        nodes: path,
        cost: dist[goal],
    })
}

/// Index in `0..n` minimizing `score`; ties break on the lower index.
pub fn argmin_node(n: usize, mut score: impl FnMut(usize) -> Result<f64>) -> Result<usize> {
    if n == 0 {
        return Err(Error::EmptySelection("no nodes to score".into()));
    }
    let mut best = (f64::INFINITY, 0usize);
    for i in 0..n {
        let s = score(i)?;
        if s < best.0 {
            best = (s, i);
        }
    }
    Ok(best.1)
}

/// Node whose stored observation the policy judges temporally closest to the
/// current view. Ties break on the lower node index.
pub fn localize(
    policy: &Policy,
    history: &[Observation],
    obs: &Observation,
    graph: &TopoGraph,
) -> Result<usize> {
    let ctx = scale_stack(history);
    let scaled = scale_obs(obs);
    argmin_node(graph.nodes.len(), |i| {
        Ok(policy.predict(&ctx, &scaled, &scale_obs(&graph.nodes[i].obs))?.distance)
    })
}
