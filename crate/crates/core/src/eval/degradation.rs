//! Robot degradations applied at deployment time: clipped steering
//! authority, a shifted sensor mount, and asymmetric actuator damage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::embodiment::{Command, EmbodimentSpec, Kinematics, SensorConfig};

/// One way to break a robot without retraining the policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Degradation {
    /// Rotational command authority limited to `fraction` of the spec's
    /// limit (yaw rate, or steering angle for car-like robots).
    SteeringClip { fraction: f64 },
    /// Sensor mount displaced in the body frame and rotated.
    ViewpointShift { forward: f64, lateral: f64, yaw: f64 },
    /// Per-actuator gain loss; differential drives damage individual wheels,
    /// other families damage command channels.
    ActuatorDamage { gains: Vec<f64> },
}

impl Degradation {
    /// Reject out-of-range severities (fractions and gains must stay in
    /// (0, 1]).
    pub fn validate(&self) -> Result<()> {
        match self {
            Degradation::SteeringClip { fraction } => {
                if !(*fraction > 0.0 && *fraction <= 1.0) {
                    return Err(Error::InvalidArg(format!(
                        "steering clip fraction must lie in (0, 1], got {fraction}"
                    )));
                }
            }
            Degradation::ViewpointShift { forward, lateral, yaw } => {
                if !(forward.is_finite() && lateral.is_finite() && yaw.is_finite()) {
                    return Err(Error::InvalidArg("viewpoint shift must be finite".into()));
                }
            }
            Degradation::ActuatorDamage { gains } => {
                if gains.is_empty() || gains.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) {
                    return Err(Error::InvalidArg(format!(
                        "actuator gains must lie in (0, 1], got {gains:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// True when applying this degradation changes nothing.
    pub fn is_identity(&self) -> bool {
        match self {
            Degradation::SteeringClip { fraction } => *fraction >= 1.0,
            Degradation::ViewpointShift { forward, lateral, yaw } => {
                *forward == 0.0 && *lateral == 0.0 && *yaw == 0.0
            }
            Degradation::ActuatorDamage { gains } => gains.iter().all(|g| *g == 1.0),
        }
    }

    /// Stable condition label for report rows.
    pub fn label(&self) -> String {
        match self {
            Degradation::SteeringClip { fraction } => format!("steering_clip_{fraction:.2}"),
            Degradation::ViewpointShift { forward, lateral, yaw } => {
                format!("viewpoint_shift_{forward:.2}_{lateral:.2}_{yaw:.2}")
            }
            Degradation::ActuatorDamage { gains } => {
                let parts: Vec<String> = gains.iter().map(|g| format!("{g:.2}")).collect();
                format!("actuator_damage_{}", parts.join("_"))
            }
        }
    }

    /// Sensor configuration the episode actually renders with.
    pub fn sensor_view(&self, sensor: &SensorConfig) -> SensorConfig {
        let mut out = sensor.clone();
        if let Degradation::ViewpointShift { forward, lateral, yaw } = self {
            out.mount_offset.forward += forward;
            out.mount_offset.lateral += lateral;
            out.mount_offset.yaw_bias += yaw;
        }
        out
    }

    /// Transform a command into what the damaged robot executes. Damaged
    /// execution still saturates at the actuator envelope.
    pub fn command(&self, cmd: &Command, spec: &EmbodimentSpec) -> Command {
        match self {
            Degradation::SteeringClip { fraction } => match *cmd {
                Command::DiffDrive { v, omega } => Command::DiffDrive {
                    v,
                    omega: omega.clamp(
                        -fraction * spec.max_yaw_rate,
                        fraction * spec.max_yaw_rate,
                    ),
                },
                Command::Ackermann { v, steer } => {
                    let limit = match spec.kinematics {
                        Kinematics::Ackermann { max_steer, .. } => max_steer,
                        _ => spec.max_yaw_rate,
                    };
                    Command::Ackermann {
                        v,
                        steer: steer.clamp(-fraction * limit, fraction * limit),
                    }
                }
                Command::Holonomic { vx, vy, omega } => Command::Holonomic {
                    vx,
                    vy,
                    omega: omega.clamp(
                        -fraction * spec.max_yaw_rate,
                        fraction * spec.max_yaw_rate,
                    ),
                },
            },
            Degradation::ViewpointShift { .. } => *cmd,
            Degradation::ActuatorDamage { gains } => {
                let gain = |i: usize| gains.get(i).copied().unwrap_or(1.0);
                let damaged = match *cmd {
                    Command::DiffDrive { v, omega } => {
                        // Wheel-space damage: helm commands mix through the
                        // track width, so asymmetric loss curves the motion.
                        let half_track = spec.body_radius;
                        let left = (v - omega * half_track) * gain(0);
                        let right = (v + omega * half_track) * gain(1);
                        Command::DiffDrive {
                            v: 0.5 * (left + right),
                            omega: (right - left) / (2.0 * half_track),
                        }
                    }
                    Command::Ackermann { v, steer } => Command::Ackermann {
                        v: v * gain(0),
                        steer: steer * gain(1),
                    },
                    Command::Holonomic { vx, vy, omega } => Command::Holonomic {
                        vx: vx * gain(0),
                        vy: vy * gain(1),
                        omega: omega * gain(2),
                    },
                };
                damaged.clamp_to(spec)
            }
        }
    }
}
