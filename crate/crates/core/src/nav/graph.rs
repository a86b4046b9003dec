//! Topological map built from one prior traversal of an environment.
//!
//! Nodes are frames sampled from the traversal at a fixed time spacing; each
//! stores the observation seen there plus the short observation history that
//! preceded it. Edges connect node pairs whose policy-predicted temporal
//! distance falls under a threshold, weighted by that prediction. The file
//! form records which parameters produced the predictions, and the
//! fingerprint is checked against the supplied policy before the graph is
//! trusted.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::GraphConfig;
use crate::data::context::{build_context, ContextVariant};
use crate::data::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::policy::io::policy_fingerprint;
use crate::policy::net::{scale_obs, scale_stack, Policy};
use crate::sim::pose::Pose;
use crate::sim::sensor::Observation;
use crate::sim::world::Difficulty;

/// Schema tag for graph files.
pub const GRAPH_SCHEMA: &str = "gnm-graph/1";

/// One place the traversal visited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphNode {
    /// Observation recorded at this node; used as a subgoal input.
    pub obs: Observation,
    /// Observation history at the node, oldest first, for context-aware
    /// edge prediction.
    pub history: Vec<Observation>,
    /// Ground-truth pose, kept for analysis and progress metrics only.
    pub pose: Pose,
    /// Traversal frame index the node was taken from.
    pub frame: usize,
}

/// Directed edge with a predicted temporal distance as weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Topological map of one environment under one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopoGraph {
    pub schema: String,
    /// Fingerprint of the policy parameters that scored the edges.
    pub params_fingerprint: String,
    /// Seed of the world the traversal came from.
    pub world_seed: u64,
    pub difficulty: Difficulty,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

/// Sample traversal frames every `node_spacing_s` seconds, keeping the final
/// frame, and connect pairs the policy deems close.
pub fn build_graph(
    policy: &Policy,
    traversal: &Trajectory,
    difficulty: Difficulty,
    config: &GraphConfig,
) -> Result<TopoGraph> {
    build_graph_with(
        traversal,
        difficulty,
        config,
        policy.meta.context_variant,
        policy.meta.context_k,
        policy_fingerprint(policy),
        |from, to| {
            let ctx = scale_stack(&from.history);
            let obs = scale_obs(&from.obs);
            Ok(policy.predict(&ctx, &obs, &scale_obs(&to.obs))?.distance)
        },
    )
}

/// Graph construction with an arbitrary node-to-node distance estimator, so
/// the sampling and thresholding logic can be exercised without a policy.
pub fn build_graph_with<F>(
    traversal: &Trajectory,
    difficulty: Difficulty,
    config: &GraphConfig,
    context_variant: ContextVariant,
    context_k: usize,
    fingerprint: String,
    mut distance: F,
) -> Result<TopoGraph>
where
    F: FnMut(&GraphNode, &GraphNode) -> Result<f64>,
{
    if traversal.frames.is_empty() {
        return Err(Error::EmptySelection("traversal has no frames".into()));
    }
    let dt = traversal.dt();
    let spacing = (config.node_spacing_s / dt).round().max(1.0) as usize;
    let observations = traversal.observations();

    let mut frame_ids: Vec<usize> = (0..traversal.len()).step_by(spacing).collect();
    if *frame_ids.last().unwrap() != traversal.len() - 1 {
        frame_ids.push(traversal.len() - 1);
    }
    let nodes: Vec<GraphNode> = frame_ids
        .iter()
        .map(|&frame| GraphNode {
            obs: traversal.frames[frame].obs.clone(),
            history: build_context(&observations, frame, context_variant, context_k).obs_stack,
            pose: traversal.frames[frame].pose,
            frame,
        })
        .collect();

    let mut edges = Vec::new();
    for (i, from) in nodes.iter().enumerate() {
        for (j, to) in nodes.iter().enumerate() {
            if i == j {
                continue;
            }
            let weight = distance(from, to)?;
            if weight < config.edge_threshold {
                edges.push(GraphEdge {
                    from: i,
                    to: j,
                    weight,
                });
            }
        }
    }

    Ok(TopoGraph {
        schema: GRAPH_SCHEMA.into(),
        params_fingerprint: fingerprint,
        world_seed: traversal.world_seed,
        difficulty,
        nodes,
        edges,
    })
}

impl TopoGraph {
    /// Write the graph as JSON.
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    /// Read a graph, checking the schema tag.
    pub fn load(path: &Path) -> Result<TopoGraph> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let graph: TopoGraph = serde_json::from_str(&text)?;
        if graph.schema != GRAPH_SCHEMA {
            return Err(Error::SchemaVersion {
                expected: GRAPH_SCHEMA.into(),
                found: graph.schema,
            });
        }
        Ok(graph)
    }

    /// Refuse to pair this graph with a policy other than the one that
    /// built it.
    pub fn verify_policy(&self, policy: &Policy) -> Result<()> {
        let params = policy_fingerprint(policy);
        if params != self.params_fingerprint {
            let graph = u64::from_str_radix(&self.params_fingerprint, 16).unwrap_or(0);
            let params = u64::from_str_radix(&params, 16).unwrap_or(0);
            return Err(Error::FingerprintMismatch { graph, params });
        }
        Ok(())
    }
}
