//! Scripted expert: grid-planned route plus pure-pursuit tracking.
//!
//! The expert replaces human demonstration. It plans with the body-inflated
//! occupancy grid, then tracks the route at the embodiment's own pace and
//! steering limits, logging an observation, pose, and command every control
//! period. Runs that collide, stall, or fail to reach the goal are discarded
//! by returning an error so callers can retry on a fresh world.

use crate::error::{Error, Result};
use crate::rng::{derive_seed, tag};
use crate::sim::dynamics::step_dynamics;
use crate::sim::embodiment::{Command, EmbodimentSpec, Kinematics};
use crate::sim::grid::{path_length, plan_route};
use crate::sim::pose::{normalize_angle, Pose};
use crate::sim::sensor::render_observation;
use crate::sim::world::{check_collision, WorldMap};

use super::trajectory::{Frame, Trajectory};

/// Fraction of the steering limit the expert actually uses, keeping logged
/// curvature strictly inside the kinematic bound.
const STEER_SAFETY: f64 = 0.96;

/// Extra inflation beyond the body radius when planning the route, absorbing
/// tracking error. Tried widest first; narrower corridors fall back down the
/// ladder until a route exists.
const TRACK_MARGINS: [f64; 5] = [0.45, 0.32, 0.2, 0.1, 0.0];

/// Heading change at a route vertex that counts as a sharp corner.
const SHARP_TURN: f64 = 0.5;

/// A polyline route with an arc-length parameterization.
struct RoutePursuit {
    points: Vec<(f64, f64)>,
    cum: Vec<f64>,
}

impl RoutePursuit {
    fn new(points: Vec<(f64, f64)>) -> RoutePursuit {
        let mut cum = vec![0.0];
        for w in points.windows(2) {
            let d = ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt();
            cum.push(cum.last().unwrap() + d);
        }
        RoutePursuit { points, cum }
    }

    fn total_len(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn point_at(&self, s: f64) -> (f64, f64) {
        let s = s.clamp(0.0, self.total_len());
        for i in 0..self.points.len() - 1 {
            if s <= self.cum[i + 1] || i == self.points.len() - 2 {
                let seg = self.cum[i + 1] - self.cum[i];
                let t = if seg > 0.0 { (s - self.cum[i]) / seg } else { 0.0 };
                let a = self.points[i];
                let b = self.points[i + 1];
                return (a.0 + t.clamp(0.0, 1.0) * (b.0 - a.0), a.1 + t.clamp(0.0, 1.0) * (b.1 - a.1));
            }
        }
        *self.points.last().unwrap()
    }

    /// Lookahead target constrained to the polyline: aims `lookahead` ahead of
    /// `s`, but no further than just past the next sharp corner, so the chord
    /// from the body never cuts deep inside a bend.
    fn target_for(&self, s: f64, lookahead: f64) -> (f64, f64) {
        let mut target_s = s + lookahead;
        for i in 1..self.points.len() - 1 {
            let cum_v = self.cum[i];
            if cum_v <= s + 0.25 || cum_v >= s + lookahead {
                continue;
            }
            let a = self.points[i - 1];
            let b = self.points[i];
            let c = self.points[i + 1];
            let h_in = (b.1 - a.1).atan2(b.0 - a.0);
            let h_out = (c.1 - b.1).atan2(c.0 - b.0);
            if normalize_angle(h_out - h_in).abs() > SHARP_TURN {
                target_s = cum_v + 0.15;
                break;
            }
        }
        self.point_at(target_s)
    }

    /// Monotone projection: the arc position nearest the pose, searched in
    /// `[s_hint, s_hint + window]`.
    fn project(&self, x: f64, y: f64, s_hint: f64, window: f64) -> f64 {
        let mut best = (f64::INFINITY, s_hint);
        for i in 0..self.points.len() - 1 {
            if self.cum[i + 1] < s_hint || self.cum[i] > s_hint + window {
                continue;
            }
            let a = self.points[i];
            let b = self.points[i + 1];
            let dx = b.0 - a.0;
            let dy = b.1 - a.1;
            let len2 = dx * dx + dy * dy;
            let t = if len2 > 0.0 {
                (((x - a.0) * dx + (y - a.1) * dy) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let px = a.0 + t * dx;
            let py = a.1 + t * dy;
            let d2 = (x - px).powi(2) + (y - py).powi(2);
            let s = (self.cum[i] + t * (len2).sqrt()).clamp(s_hint, s_hint + window);
            if d2 < best.0 {
                best = (d2, s);
            }
        }
        best.1
    }
}

/// Same command with the linear velocity scaled down; turning terms are kept.
fn scale_linear(cmd: &Command, f: f64) -> Command {
    match *cmd {
        Command::DiffDrive { v, omega } => Command::DiffDrive { v: v * f, omega },
        Command::Ackermann { v, steer } => Command::Ackermann { v: v * f, steer },
        Command::Holonomic { vx, vy, omega } => Command::Holonomic {
            vx: vx * f,
            vy: vy * f,
            omega,
        },
    }
}

/// Drive `spec` from `start` to `goal` through `world`, logging frames at the
/// embodiment's control rate. Deterministic per seed.
pub fn collect_trajectory(
    world: &WorldMap,
    spec: &EmbodimentSpec,
    start: &Pose,
    goal: (f64, f64),
    seed: u64,
) -> Result<Trajectory> {
    if check_collision(world, start, spec.body_radius) {
        return Err(Error::InvalidArg("start pose is in collision".into()));
    }
    let mut points = None;
    for margin in TRACK_MARGINS {
        if let Ok(p) = plan_route(world, spec.body_radius + margin, (start.x, start.y), goal) {
            points = Some(p);
            break;
        }
    }
    let route = RoutePursuit::new(points.ok_or(Error::Unreachable)?);
    let dt = spec.dt();
    let lookahead = (0.55 * spec.alpha).clamp(0.35, 1.8);
    let max_steps = ((route.total_len() / spec.alpha / dt) * 6.0).ceil() as usize + 600;

    let mut frames: Vec<Frame> = Vec::new();
    let mut pose = *start;
    let mut s = 0.0f64;
    let mut reduced_streak = 0u32;
    for step in 0..max_steps {
        let t = step as f64 * dt;
        let obs = render_observation(
            world,
            &pose,
            &spec.sensor,
            derive_seed(seed, &[tag::SENSOR, step as u64]),
        );
        let d_goal = pose.distance_to(goal.0, goal.1);
        if d_goal <= world.goal_radius {
            frames.push(Frame {
                t,
                obs,
                pose,
                cmd: Command::zero(spec.kinematics),
            });
            return Ok(Trajectory {
                embodiment_id: spec.id.clone(),
                alpha: spec.alpha,
                frames,
                world_seed: 0,
                run_seed: seed,
            });
        }

        s = route.project(pose.x, pose.y, s, 3.0);
        // A streak of reduced steps means the chord to the lookahead target is
        // blocked (wedged against a corner); retreat toward the route itself.
        let target = if reduced_streak >= 3 {
            route.point_at(s + 0.3)
        } else {
            route.target_for(s, lookahead)
        };
        let (tx, ty) = pose.world_to_body(target.0, target.1);
        let heading_err = ty.atan2(tx);
        let target_dist = (tx * tx + ty * ty).sqrt().max(1e-6);

        let cmd = match spec.kinematics {
            Kinematics::DiffDrive => {
                let omega = 2.8 * heading_err;
                let mut v = spec.alpha * heading_err.cos().max(0.0);
                if heading_err.abs() > 1.2 {
                    v = 0.0; // rotate in place first
                }
                v = v.min(1.5 * d_goal);
                Command::DiffDrive { v, omega }
            }
            Kinematics::Ackermann {
                wheelbase,
                max_steer,
            } => {
                // Pure-pursuit curvature through the lookahead point.
                let kappa = 2.0 * heading_err.sin() / target_dist.max(0.3);
                let steer = (kappa * wheelbase)
                    .atan()
                    .clamp(-STEER_SAFETY * max_steer, STEER_SAFETY * max_steer);
                let v = (spec.alpha * heading_err.cos().max(0.25)).min(1.5 * d_goal + 0.05);
                Command::Ackermann { v, steer }
            }
            Kinematics::Holonomic => {
                let speed = spec
                    .alpha
                    .min(1.8 * target_dist)
                    .min(1.5 * d_goal + 0.05);
                Command::Holonomic {
                    vx: speed * tx / target_dist,
                    vy: speed * ty / target_dist,
                    omega: 2.5 * heading_err,
                }
            }
        }
        .clamp_to(spec);

        // Recovery ladder: if the full command would graze an obstacle, retry
        // at reduced speed, then rotation only, before giving up on the run.
        let mut candidates = vec![cmd.clone(), scale_linear(&cmd, 0.5), scale_linear(&cmd, 0.25)];
        match spec.kinematics {
            Kinematics::Ackermann { .. } => {}
            _ => candidates.push(scale_linear(&cmd, 0.0)),
        }
        let mut executed = None;
        for (rung, candidate) in candidates.into_iter().enumerate() {
            let next = step_dynamics(&pose, &candidate, spec, dt)?;
            if !check_collision(world, &next, spec.body_radius) {
                executed = Some((rung, candidate, next));
                break;
            }
        }
        let Some((rung, cmd, next)) = executed else {
            return Err(Error::Infeasible);
        };
        reduced_streak = if rung == 0 { 0 } else { reduced_streak + 1 };
        frames.push(Frame { t, obs, pose, cmd });
        pose = next;
    }
    Err(Error::Infeasible)
}

/// Curvature of the chord between consecutive frames, assuming each step is
/// close to a circular arc.
pub fn frame_curvatures(traj: &Trajectory) -> Vec<f64> {
    traj.frames
        .windows(2)
        .filter_map(|w| {
            let chord = w[0].pose.distance_to(w[1].pose.x, w[1].pose.y);
            if chord < 1e-6 {
                return None;
            }
            let dyaw = normalize_angle(w[1].pose.yaw - w[0].pose.yaw);
            Some(2.0 * (0.5 * dyaw).sin().abs() / chord)
        })
        .collect()
}

/// Route length the expert would track for this spec, if one exists.
pub fn expert_route_length(world: &WorldMap, spec: &EmbodimentSpec) -> Result<f64> {
    let route = plan_route(
        world,
        spec.body_radius,
        world.start_xy,
        world.goal_xy,
    )?;
    Ok(path_length(&route))
}
