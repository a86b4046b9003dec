//! Closed-loop episode execution and the goal-progress metric.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::GraphConfig;
use crate::error::{Error, Result};
use crate::eval::degradation::Degradation;
use crate::nav::control::{command_from_prediction, NavSession};
use crate::nav::graph::TopoGraph;
use crate::policy::net::Policy;
use crate::rng::{derive_seed, tag};
use crate::sim::embodiment::EmbodimentSpec;
use crate::sim::sensor::render_observation;
use crate::sim::world::{check_collision, WorldMap};

/// What one navigation attempt produced.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    /// Fraction of the initial goal distance closed, clipped to [0, 1];
    /// exactly 1.0 when the goal disc was reached.
    pub progress: f64,
    pub reached: bool,
    /// Control steps consumed.
    pub steps: usize,
    /// True when the episode ended by hitting geometry.
    pub collision: bool,
    /// Where the per-step trace was written, when one was requested.
    pub trace: Option<PathBuf>,
}

/// Run one episode from the world's start toward its goal.
///
/// Each step renders a (possibly degraded) observation, queries the
/// navigation session, turns the prediction into a command, applies command
/// degradation, and integrates. Collisions freeze the robot at its last
/// valid pose and end the episode.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    world: &WorldMap,
    spec: &EmbodimentSpec,
    policy: &Policy,
    graph: &TopoGraph,
    graph_config: &GraphConfig,
    max_steps: usize,
    degradation: Option<&Degradation>,
    seed: u64,
    trace_path: Option<&Path>,
) -> Result<EpisodeResult> {
    let start = world.start_pose();
    let (gx, gy) = world.goal_xy;
    let initial = (start.x - gx).hypot(start.y - gy);
    let mut trace = trace_path.map(|p| (p.to_path_buf(), String::from("step,x,y,yaw,subgoal\n")));

    if initial < world.goal_radius {
        return finish(1.0, true, 0, false, trace);
    }

    let sensor = match degradation {
        Some(d) => d.sensor_view(&spec.sensor),
        None => spec.sensor.clone(),
    };
    let mut session = NavSession::new(policy, graph, graph_config.clone())?;
    let dt = spec.dt();
    let mut pose = start;
    let mut steps = 0;
    let mut reached = false;
    let mut collision = false;

    for step in 0..max_steps {
        let obs = render_observation(
            world,
            &pose,
            &sensor,
            derive_seed(seed, &[tag::EPISODE, step as u64]),
        );
        // A graph too sparse to route through is a scored failure of the
        // policy that built it, not a fault of the run.
        let nav = match session.step(&obs) {
            Ok(nav) => nav,
            Err(Error::Unreachable) => break,
            Err(e) => return Err(e),
        };
        let mut cmd = command_from_prediction(&nav.prediction, policy.meta.action_variant, spec);
        if let Some(d) = degradation {
            cmd = d.command(&cmd, spec);
        }
        if let Some((_, text)) = trace.as_mut() {
            text.push_str(&format!(
                "{step},{},{},{},{}\n",
                pose.x,
                pose.y,
                pose.yaw,
                session.subgoal().unwrap_or(0)
            ));
        }
        let next = crate::sim::dynamics::step_dynamics(&pose, &cmd, spec, dt)?;
        if check_collision(world, &next, spec.body_radius) {
            collision = true;
            steps = step + 1;
            break;
        }
        pose = next;
        steps = step + 1;
        if (pose.x - gx).hypot(pose.y - gy) <= world.goal_radius {
            reached = true;
            break;
        }
    }

    let progress = if reached {
        1.0
    } else {
        let fin = (pose.x - gx).hypot(pose.y - gy);
        (1.0 - fin / initial).clamp(0.0, 1.0)
    };
    finish(progress, reached, steps, collision, trace)
}

fn finish(
    progress: f64,
    reached: bool,
    steps: usize,
    collision: bool,
    trace: Option<(PathBuf, String)>,
) -> Result<EpisodeResult> {
    let trace = match trace {
        Some((path, text)) => {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            let mut file = std::fs::File::create(&path)?;
            file.write_all(text.as_bytes())?;
            Some(path)
        }
        None => None,
    };
    Ok(EpisodeResult {
        progress,
        reached,
        steps,
        collision,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use crate::data::expert::collect_trajectory;
    use crate::nav::graph::build_graph;
    use crate::policy::net::{Policy, PolicyMeta};
    use crate::sim::world::Difficulty;
    use crate::sim::worldgen::generate_world;

    fn fixture() -> (WorldMap, EmbodimentSpec, Policy, TopoGraph, GraphConfig) {
        let config = RunConfig::preset("tiny").unwrap();
        let world = generate_world(&config.worldgen, Difficulty::Easy, 21).unwrap();
        let spec = config.roster[0].clone();
        let traversal =
            collect_trajectory(&world, &spec, &world.start_pose(), world.goal_xy, 21).unwrap();
        let policy = Policy::init(
            PolicyMeta::from_config(&config, &config.policy),
            13,
        );
        let graph_config = GraphConfig {
            node_spacing_s: 1.0,
            edge_threshold: 1e9,
            subgoal_radius: 1.0,
        };
        let graph = build_graph(&policy, &traversal, Difficulty::Easy, &graph_config).unwrap();
        (world, spec, policy, graph, graph_config)
    }

    #[test]
    fn start_inside_goal_counts_as_reached() {
        let (mut world, spec, policy, graph, gc) = fixture();
        world.start_xy = world.goal_xy;
        let r = run_episode(&world, &spec, &policy, &graph, &gc, 10, None, 5, None).unwrap();
        assert!(r.reached);
        assert_eq!(r.progress, 1.0);
        assert_eq!(r.steps, 0);
    }

    #[test]
    fn zero_budget_means_zero_progress() {
        let (world, spec, policy, graph, gc) = fixture();
        let r = run_episode(&world, &spec, &policy, &graph, &gc, 0, None, 5, None).unwrap();
        assert!(!r.reached);
        assert_eq!(r.progress, 0.0);
    }

    #[test]
    fn identical_seeds_replay_identically() {
        let (world, spec, policy, graph, gc) = fixture();
        let a = run_episode(&world, &spec, &policy, &graph, &gc, 60, None, 9, None).unwrap();
        let b = run_episode(&world, &spec, &policy, &graph, &gc, 60, None, 9, None).unwrap();
        assert_eq!(a, b);
        assert!(a.progress >= 0.0 && a.progress <= 1.0);
    }

    #[test]
    fn edgeless_graph_scores_instead_of_erroring() {
        let (world, spec, policy, _, _) = fixture();
        let gc = GraphConfig {
            node_spacing_s: 1.0,
            edge_threshold: 0.0,
            subgoal_radius: 1.0,
        };
        let traversal =
            collect_trajectory(&world, &spec, &world.start_pose(), world.goal_xy, 21).unwrap();
        let graph = build_graph(&policy, &traversal, Difficulty::Easy, &gc).unwrap();
        assert!(graph.edges.is_empty());
        let r = run_episode(&world, &spec, &policy, &graph, &gc, 40, None, 5, None).unwrap();
        assert!((0.0..=1.0).contains(&r.progress));
    }

    #[test]
    fn trace_dump_writes_one_row_per_step() {
        let (world, spec, policy, graph, gc) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let r =
            run_episode(&world, &spec, &policy, &graph, &gc, 20, None, 9, Some(&path)).unwrap();
        let text = std::fs::read_to_string(r.trace.unwrap()).unwrap();
        let rows = text.lines().count();
        assert_eq!(rows, r.steps + 1);
        assert!(text.starts_with("step,x,y,yaw,subgoal\n"));
    }
}
