//! Action and distance label computation.
//!
//! The shared abstraction: future poses are expressed in the current body
//! frame and positions divided by the embodiment's top speed, so a fast and
//! a slow robot tracing the same geometry at their own pace produce the same
//! labels. Temporal distance is elapsed seconds, which is already
//! speed-invariant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::embodiment::{Command, Kinematics};
use crate::sim::pose::normalize_angle;

use super::trajectory::Trajectory;

/// What the action head is trained to output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionVariant {
    /// Body-frame waypoints with positions divided by top speed.
    NormalizedWaypoints,
    /// Body-frame waypoints in meters.
    RawWaypoints,
    /// Logged command pairs (v, yaw rate equivalent).
    Velocities,
}

impl ActionVariant {
    pub fn label(&self) -> &'static str {
        match self {
            ActionVariant::NormalizedWaypoints => "normalized_waypoints",
            ActionVariant::RawWaypoints => "raw_waypoints",
            ActionVariant::Velocities => "velocities",
        }
    }
}

/// One action-label entry. For waypoint variants (x, y) is a position and
/// `psi` a heading change; for the velocity variant x carries speed, y a yaw
/// rate, and `psi` is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

/// Poses at frames i + j*stride (j = 1..=tau) expressed in the body frame of
/// frame i; psi is the yaw difference wrapped into (-pi, pi].
pub fn relative_waypoints(
    traj: &Trajectory,
    i: usize,
    tau: usize,
    stride: usize,
) -> Result<Vec<Waypoint>> {
    if i + tau * stride >= traj.len() {
        return Err(Error::InvalidArg(format!(
            "waypoint window [{i}, {}] exceeds trajectory length {}",
            i + tau * stride,
            traj.len()
        )));
    }
    let base = &traj.frames[i].pose;
    let mut out = Vec::with_capacity(tau);
    for j in 1..=tau {
        let future = &traj.frames[i + j * stride].pose;
        let (bx, by) = base.world_to_body(future.x, future.y);
        out.push(Waypoint {
            x: bx,
            y: by,
            psi: normalize_angle(future.yaw - base.yaw),
        });
    }
    Ok(out)
}

/// Divide waypoint positions by the top speed; headings stay in radians.
pub fn normalize_action(waypoints: &[Waypoint], alpha: f64) -> Result<Vec<Waypoint>> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArg(format!(
            "normalization scale must be positive, got {alpha}"
        )));
    }
    Ok(waypoints
        .iter()
        .map(|w| Waypoint {
            x: w.x / alpha,
            y: w.y / alpha,
            psi: w.psi,
        })
        .collect())
}

/// Inverse of [`normalize_action`].
pub fn unnormalize_action(waypoints: &[Waypoint], alpha: f64) -> Vec<Waypoint> {
    waypoints
        .iter()
        .map(|w| Waypoint {
            x: w.x * alpha,
            y: w.y * alpha,
            psi: w.psi,
        })
        .collect()
}

/// Elapsed seconds between two frames of one trajectory.
pub fn distance_label(traj: &Trajectory, i: usize, j: usize) -> Result<f64> {
    if j < i {
        return Err(Error::InvalidArg(format!(
            "distance label needs j >= i, got ({i}, {j})"
        )));
    }
    if j >= traj.len() {
        return Err(Error::InvalidArg(format!(
            "frame {j} out of range {}",
            traj.len()
        )));
    }
    Ok(traj.frames[j].t - traj.frames[i].t)
}

/// Action labels for a window starting at frame i, under the chosen variant.
/// The kinematics is needed only to reduce logged commands to (speed, yaw
/// rate) for the velocity variant.
pub fn action_labels(
    traj: &Trajectory,
    i: usize,
    variant: ActionVariant,
    tau: usize,
    stride: usize,
    kinematics: Kinematics,
) -> Result<Vec<Waypoint>> {
    match variant {
        ActionVariant::NormalizedWaypoints => {
            normalize_action(&relative_waypoints(traj, i, tau, stride)?, traj.alpha)
        }
        ActionVariant::RawWaypoints => relative_waypoints(traj, i, tau, stride),
        ActionVariant::Velocities => {
            if i + tau * stride >= traj.len() {
                return Err(Error::InvalidArg(format!(
                    "velocity window [{i}, {}] exceeds trajectory length {}",
                    i + tau * stride,
                    traj.len()
                )));
            }
            let mut out = Vec::with_capacity(tau);
            for j in 0..tau {
                let frame = &traj.frames[i + 1 + j * stride];
                let (v, yaw_rate) = command_velocity(&frame.cmd, kinematics);
                out.push(Waypoint {
                    x: v,
                    y: yaw_rate,
                    psi: 0.0,
                });
            }
            Ok(out)
        }
    }
}

/// Reduce any command to a (speed, yaw-rate) pair.
fn command_velocity(cmd: &Command, kinematics: Kinematics) -> (f64, f64) {
    match *cmd {
        Command::DiffDrive { v, omega } => (v, omega),
        Command::Ackermann { v, steer } => {
            let wheelbase = match kinematics {
                Kinematics::Ackermann { wheelbase, .. } => wheelbase,
                _ => 1.0,
            };
            (v, v * steer.tan() / wheelbase)
        }
        Command::Holonomic { vx, vy, omega } => ((vx * vx + vy * vy).sqrt(), omega),
    }
}
