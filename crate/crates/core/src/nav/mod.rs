//! Topological navigation: graph construction, planning, and deployment
//! control on top of a trained policy.

pub mod control;
pub mod graph;
pub mod plan;

pub use control::{command_from_prediction, track_waypoints, NavSession, NavStep, K_OMEGA, K_V};
pub use graph::{build_graph, build_graph_with, GraphEdge, GraphNode, TopoGraph, GRAPH_SCHEMA};
pub use plan::{argmin_node, localize, shortest_path, NavPlan};
