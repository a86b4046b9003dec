//! Turning policy outputs into motor commands, and the per-episode session
//! that walks the topological plan subgoal by subgoal.

use crate::config::GraphConfig;
use crate::data::context::build_context;
use crate::data::labels::{ActionVariant, Waypoint};
use crate::error::Result;
use crate::nav::graph::TopoGraph;
use crate::nav::plan::{localize, shortest_path};
use crate::policy::net::{scale_obs, scale_stack, Policy, Prediction};
use crate::sim::embodiment::{Command, EmbodimentSpec, Kinematics};
use crate::sim::sensor::Observation;

/// Proportional gain on the distance to the tracked waypoint.
pub const K_V: f64 = 1.0;

/// Proportional gain on the bearing (or heading) error.
pub const K_OMEGA: f64 = 2.0;

/// Waypoints closer than this (meters) are considered already met and
/// skipped in favor of a later one.
pub const DEADBAND: f64 = 0.05;

/// Proportional pursuit of a body-frame waypoint sequence in meters: the
/// first waypoint beyond the deadband is tracked (falling back to the last),
/// and the command is clamped to the embodiment's limits.
pub fn track_waypoints(waypoints: &[Waypoint], spec: &EmbodimentSpec) -> Command {
    let wp = waypoints
        .iter()
        .find(|w| w.x.hypot(w.y) > DEADBAND)
        .unwrap_or_else(|| waypoints.last().expect("non-empty waypoint sequence"));
    let norm = wp.x.hypot(wp.y);
    let bearing = wp.y.atan2(wp.x);
    let cmd = match spec.kinematics {
        Kinematics::DiffDrive => Command::DiffDrive {
            v: (K_V * norm).clamp(0.0, spec.alpha) * bearing.cos().max(0.0),
            omega: K_OMEGA * bearing,
        },
        Kinematics::Ackermann { .. } => Command::Ackermann {
            v: (K_V * norm).clamp(0.0, spec.alpha) * bearing.cos().max(0.0),
            steer: K_OMEGA * bearing,
        },
        Kinematics::Holonomic => {
            let speed = (K_V * norm).min(spec.alpha);
            let (vx, vy) = if norm > 0.0 {
                (speed * wp.x / norm, speed * wp.y / norm)
            } else {
                (0.0, 0.0)
            };
            Command::Holonomic {
                vx,
                vy,
                omega: K_OMEGA * wp.psi,
            }
        }
    };
    cmd.clamp_to(spec)
}

/// Interpret a prediction under its action variant and produce a command.
pub fn command_from_prediction(
    pred: &Prediction,
    variant: ActionVariant,
    spec: &EmbodimentSpec,
) -> Command {
    match variant {
        ActionVariant::NormalizedWaypoints => {
            let meters: Vec<Waypoint> = pred
                .waypoints
                .iter()
                .map(|w| Waypoint {
                    x: w.x * spec.alpha,
                    y: w.y * spec.alpha,
                    psi: w.psi,
                })
                .collect();
            track_waypoints(&meters, spec)
        }
        ActionVariant::RawWaypoints => track_waypoints(&pred.waypoints, spec),
        ActionVariant::Velocities => {
            let first = &pred.waypoints[0];
            let v = first.x;
            let omega = first.y;
            match spec.kinematics {
                Kinematics::DiffDrive => Command::DiffDrive { v, omega },
                Kinematics::Ackermann { wheelbase, .. } => Command::Ackermann {
                    v: v.max(0.0),
                    steer: (omega * wheelbase / v.abs().max(0.2 * spec.alpha)).atan(),
                },
                Kinematics::Holonomic => Command::Holonomic {
                    vx: v,
                    vy: 0.0,
                    omega,
                },
            }
            .clamp_to(spec)
        }
    }
}

/// Outcome of one navigation step.
#[derive(Debug, Clone)]
pub struct NavStep {
    /// Prediction toward the active subgoal after any handoffs.
    pub prediction: Prediction,
    /// True when the final plan node is predicted within the handoff radius.
    pub done: bool,
}

/// One episode's navigation state: localize once, plan once, then advance a
/// cursor along the plan as subgoals come within the handoff radius.
pub struct NavSession<'a> {
    policy: &'a Policy,
    graph: &'a TopoGraph,
    config: GraphConfig,
    history: Vec<Observation>,
    plan: Vec<usize>,
    cursor: usize,
}

impl<'a> NavSession<'a> {
    /// Check the graph belongs to this policy and prepare an empty session;
    /// localization happens on the first `step`.
    pub fn new(policy: &'a Policy, graph: &'a TopoGraph, config: GraphConfig) -> Result<Self> {
        graph.verify_policy(policy)?;
        Ok(NavSession {
            policy,
            graph,
            config,
            history: Vec::new(),
            plan: Vec::new(),
            cursor: 0,
        })
    }

    /// Feed the current observation, advancing the subgoal cursor whenever
    /// the prediction puts the active subgoal inside the handoff radius.
    pub fn step(&mut self, obs: &Observation) -> Result<NavStep> {
        self.history.push(obs.clone());
        let refs: Vec<&Observation> = self.history.iter().collect();
        let stack = build_context(
            &refs,
            self.history.len() - 1,
            self.policy.meta.context_variant,
            self.policy.meta.context_k,
        )
        .obs_stack;
        let ctx = scale_stack(&stack);
        let scaled_obs = scale_obs(obs);

        if self.plan.is_empty() {
            let start = localize(self.policy, &stack, obs, self.graph)?;
            let goal = self.graph.nodes.len() - 1;
            self.plan = shortest_path(self.graph, start, goal)?.nodes;
            self.cursor = 0;
        }

        loop {
            let node = &self.graph.nodes[self.plan[self.cursor]];
            let pred = self.policy.predict(&ctx, &scaled_obs, &scale_obs(&node.obs))?;
            let close = pred.distance < self.config.subgoal_radius;
            if close && self.cursor + 1 < self.plan.len() {
                self.cursor += 1;
                continue;
            }
            return Ok(NavStep {
                done: close && self.cursor + 1 == self.plan.len(),
                prediction: pred,
            });
        }
    }

    /// Graph node index of the active subgoal, if planning has happened.
    pub fn subgoal(&self) -> Option<usize> {
        self.plan.get(self.cursor).copied()
    }

    /// Plan position never moves backward; exposed for monotonicity checks.
    pub fn cursor(&self) -> usize {
        self.cursor
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{GoalMode, RunConfig};
    use crate::data::context::ContextVariant;
    use crate::data::expert::collect_trajectory;
    use crate::nav::graph::build_graph;
    use crate::policy::net::PolicyMeta;
    use crate::sim::embodiment::{MountOffset, SensorConfig};
    use crate::sim::world::Difficulty;
    use crate::sim::worldgen::generate_world;

    fn dd_spec(alpha: f64) -> EmbodimentSpec {
        EmbodimentSpec {
            id: "dd".into(),
            kinematics: Kinematics::DiffDrive,
            alpha,
            max_yaw_rate: 2.0,
            body_radius: 0.2,
            sensor: SensorConfig {
                n_rays: 32,
                fov: 2.5,
                max_range: 6.0,
                mount_offset: MountOffset { forward: 0.0, lateral: 0.0, yaw_bias: 0.0 },
                noise_std: 0.0,
            },
            control_rate: 4.0,
        }
    }

    fn wp(x: f64, y: f64) -> Waypoint {
        Waypoint { x, y, psi: 0.0 }
    }

    #[test]
    fn dead_ahead_target_drives_straight() {
        let cmd = track_waypoints(&[wp(0.8, 0.0)], &dd_spec(1.0));
        match cmd {
            Command::DiffDrive { v, omega } => {
                assert!(v > 0.0);
                assert!(omega.abs() < 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn lateral_target_turns_left_with_reduced_speed() {
        let straight = track_waypoints(&[wp(0.8, 0.0)], &dd_spec(1.0));
        let lateral = track_waypoints(&[wp(0.0, 0.8)], &dd_spec(1.0));
        match (straight, lateral) {
            (Command::DiffDrive { v: vs, .. }, Command::DiffDrive { v: vl, omega }) => {
                assert!(omega > 0.0);
                assert!(vl < vs);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn deadband_skips_to_a_later_waypoint() {
        let cmd = track_waypoints(&[wp(0.01, 0.0), wp(0.6, 0.0)], &dd_spec(1.0));
        match cmd {
            Command::DiffDrive { v, .. } => assert!(v > 0.3),
            _ => unreachable!(),
        }
    }

    #[test]
    fn commands_respect_limits_across_kinematics() {
        let specs = [
            dd_spec(1.5),
            EmbodimentSpec {
                kinematics: Kinematics::Ackermann { wheelbase: 0.4, max_steer: 0.5 },
                ..dd_spec(2.0)
            },
            EmbodimentSpec {
                kinematics: Kinematics::Holonomic,
                ..dd_spec(1.2)
            },
        ];
        for spec in &specs {
            for &(x, y, psi) in &[(3.0, -2.0, 2.5), (-1.0, 0.5, -3.0), (0.0, 0.0, 0.0)] {
                let cmd = track_waypoints(&[Waypoint { x, y, psi }], spec);
                assert!(cmd.within_limits(spec), "{cmd:?} breaks limits of {}", spec.id);
            }
        }
    }

    #[test]
    fn normalized_variant_scales_with_alpha() {
        let pred = Prediction {
            distance: 1.0,
            waypoints: vec![wp(0.2, 0.0)],
        };
        let slow = command_from_prediction(&pred, ActionVariant::NormalizedWaypoints, &dd_spec(0.5));
        let fast = command_from_prediction(&pred, ActionVariant::NormalizedWaypoints, &dd_spec(2.0));
        match (slow, fast) {
            (Command::DiffDrive { v: vs, .. }, Command::DiffDrive { v: vf, .. }) => {
                assert!((vs - 0.1).abs() < 1e-12);
                assert!((vf - 0.4).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn velocity_variant_passes_commands_through() {
        let pred = Prediction {
            distance: 1.0,
            waypoints: vec![wp(0.7, -0.4)],
        };
        match command_from_prediction(&pred, ActionVariant::Velocities, &dd_spec(1.0)) {
            Command::DiffDrive { v, omega } => {
                assert!((v - 0.7).abs() < 1e-12);
                assert!((omega + 0.4).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn session_plans_and_advances() {
        let config = RunConfig::preset("tiny").unwrap();
        let world = generate_world(&config.worldgen, Difficulty::Easy, 3).unwrap();
        let spec = dd_spec(1.0);
        let traversal =
            collect_trajectory(&world, &spec, &world.start_pose(), world.goal_xy, 3).unwrap();
        let policy = Policy::init(
            PolicyMeta {
                goal_mode: GoalMode::Conditioned,
                action_variant: ActionVariant::NormalizedWaypoints,
                context_variant: ContextVariant::Temporal,
                n_rays: 32,
                context_k: 5,
                tau: 5,
                encoder_hidden: vec![16],
                embedding: 8,
                trunk_hidden: vec![16],
            },
            7,
        );
        // Untrained distances are roughly constant, so force full
        // connectivity to exercise the plan/handoff machinery.
        let graph_config = GraphConfig {
            node_spacing_s: 1.0,
            edge_threshold: 1e9,
            subgoal_radius: 1.0,
        };
        let graph = build_graph(&policy, &traversal, Difficulty::Easy, &graph_config).unwrap();
        let mut session = NavSession::new(&policy, &graph, graph_config).unwrap();
        let first = session.step(&traversal.frames[0].obs).unwrap();
        assert!(first.prediction.distance.is_finite());
        assert!(session.subgoal().is_some());
        let cursor = session.cursor();
        let again = session.step(&traversal.frames[1].obs).unwrap();
        assert_eq!(again.prediction.waypoints.len(), 5);
        assert!(session.cursor() >= cursor);
    }
}
