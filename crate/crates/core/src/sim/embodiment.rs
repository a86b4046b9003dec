//! Robot embodiments: kinematics class, speed/actuation limits, sensor layout.
//!
//! An embodiment bundles everything that distinguishes one robot body from
//! another. The dataset generator, the policy's normalization layer, and the
//! deployment controller all key off these fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kinematics family of an embodiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kinematics {
    /// Independent forward speed and yaw rate; can turn in place.
    DiffDrive,
    /// Car-like: forward speed plus steering angle, minimum turning radius
    /// `wheelbase / tan(max_steer)`.
    Ackermann { wheelbase: f64, max_steer: f64 },
    /// Free planar velocity plus yaw rate.
    Holonomic,
}

impl Kinematics {
    /// Number of command channels (2 for DiffDrive/Ackermann, 3 for Holonomic).
    pub fn command_dim(&self) -> usize {
        match self {
            Kinematics::Holonomic => 3,
            _ => 2,
        }
    }

    /// Maximum achievable path curvature in 1/m, if the kinematics bounds it.
    pub fn max_curvature(&self) -> Option<f64> {
        match self {
            Kinematics::Ackermann {
                wheelbase,
                max_steer,
            } => Some(max_steer.tan() / wheelbase),
            _ => None,
        }
    }
}

/// Range-sensor geometry and noise. `n_rays` is identical across every
/// embodiment so observations share one fixed width; fov, mounting, range and
/// noise differ per robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub n_rays: usize,
    /// Angular span of the ray fan, radians.
    pub fov: f64,
    /// Readings are clipped to this range, meters.
    pub max_range: f64,
    /// Sensor origin offset in the body frame plus a fan rotation.
    pub mount_offset: MountOffset,
    /// Std-dev of additive Gaussian range noise, meters.
    pub noise_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MountOffset {
    pub forward: f64,
    pub lateral: f64,
    pub yaw_bias: f64,
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fov <= 0.0 || self.fov > 2.0 * std::f64::consts::PI {
            return Err(Error::InvalidArg(format!(
                "sensor fov must lie in (0, 2*pi], got {}",
                self.fov
            )));
        }
        if self.max_range <= 0.0 {
            return Err(Error::InvalidArg(format!(
                "sensor max_range must be positive, got {}",
                self.max_range
            )));
        }
        if self.noise_std < 0.0 {
            return Err(Error::InvalidArg("sensor noise_std negative".into()));
        }
        Ok(())
    }
}

/// One robot body: the unit of heterogeneity across the fleet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbodimentSpec {
    pub id: String,
    pub kinematics: Kinematics,
    /// Top speed in m/s; doubles as the action-normalization scale.
    pub alpha: f64,
    pub max_yaw_rate: f64,
    /// Collision disc radius, meters.
    pub body_radius: f64,
    pub sensor: SensorConfig,
    /// Control loop frequency, Hz; frame spacing is 1/control_rate.
    pub control_rate: f64,
}

impl EmbodimentSpec {
    pub fn dt(&self) -> f64 {
        1.0 / self.control_rate
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidArg(format!(
                "{}: alpha must be positive",
                self.id
            )));
        }
        if !(self.max_yaw_rate > 0.0) || !(self.body_radius > 0.0) || !(self.control_rate > 0.0) {
            return Err(Error::InvalidArg(format!(
                "{}: max_yaw_rate, body_radius, control_rate must be positive",
                self.id
            )));
        }
        if let Kinematics::Ackermann {
            wheelbase,
            max_steer,
        } = self.kinematics
        {
            let radius = wheelbase / max_steer.tan();
            if !(wheelbase > 0.0) || !(max_steer > 0.0) || !(radius > 0.0) {
                return Err(Error::InvalidArg(format!(
                    "{}: Ackermann turning radius must be positive",
                    self.id
                )));
            }
        }
        self.sensor.validate()
    }
}

/// Check roster-wide invariants: uniform ray count, positive per-spec limits,
/// and a top-speed spread of at least 0.5–5.0 m/s.
pub fn validate_roster(roster: &[EmbodimentSpec]) -> Result<()> {
    if roster.is_empty() {
        return Err(Error::InvalidArg("embodiment roster is empty".into()));
    }
    for spec in roster {
        spec.validate()?;
    }
    let n_rays = roster[0].sensor.n_rays;
    if roster.iter().any(|s| s.sensor.n_rays != n_rays) {
        return Err(Error::InvalidArg(
            "all embodiments must share one sensor ray count".into(),
        ));
    }
    let min_alpha = roster.iter().map(|s| s.alpha).fold(f64::INFINITY, f64::min);
    let max_alpha = roster
        .iter()
        .map(|s| s.alpha)
        .fold(f64::NEG_INFINITY, f64::max);
    if roster.len() > 1 && (min_alpha > 0.5 || max_alpha < 5.0) {
        return Err(Error::InvalidArg(format!(
            "roster top speeds must span at least 0.5-5.0 m/s, got {min_alpha}-{max_alpha}"
        )));
    }
    Ok(())
}

/// A velocity-level command, tagged by the kinematics it drives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Command {
    DiffDrive { v: f64, omega: f64 },
    Ackermann { v: f64, steer: f64 },
    Holonomic { vx: f64, vy: f64, omega: f64 },
}

impl Command {
    /// Zero command for the given kinematics.
    pub fn zero(kinematics: Kinematics) -> Command {
        match kinematics {
            Kinematics::DiffDrive => Command::DiffDrive { v: 0.0, omega: 0.0 },
            Kinematics::Ackermann { .. } => Command::Ackermann { v: 0.0, steer: 0.0 },
            Kinematics::Holonomic => Command::Holonomic {
                vx: 0.0,
                vy: 0.0,
                omega: 0.0,
            },
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }

    /// Channel values in file order (`cmd_0, cmd_1[, cmd_2]`).
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Command::DiffDrive { v, omega } => vec![v, omega],
            Command::Ackermann { v, steer } => vec![v, steer],
            Command::Holonomic { vx, vy, omega } => vec![vx, vy, omega],
        }
    }

    /// Rebuild a command from channel values logged for `kinematics`.
    pub fn from_values(kinematics: Kinematics, values: &[f64]) -> Result<Command> {
        let need = kinematics.command_dim();
        if values.len() != need {
            return Err(Error::InvalidArg(format!(
                "expected {need} command channels, got {}",
                values.len()
            )));
        }
        Ok(match kinematics {
            Kinematics::DiffDrive => Command::DiffDrive {
                v: values[0],
                omega: values[1],
            },
            Kinematics::Ackermann { .. } => Command::Ackermann {
                v: values[0],
                steer: values[1],
            },
            Kinematics::Holonomic => Command::Holonomic {
                vx: values[0],
                vy: values[1],
                omega: values[2],
            },
        })
    }

    /// True when every channel respects the spec's actuation limits.
    pub fn within_limits(&self, spec: &EmbodimentSpec) -> bool {
        let eps = 1e-9;
        match *self {
            Command::DiffDrive { v, omega } => {
                v.abs() <= spec.alpha + eps && omega.abs() <= spec.max_yaw_rate + eps
            }
            Command::Ackermann { v, steer } => {
                let max_steer = match spec.kinematics {
                    Kinematics::Ackermann { max_steer, .. } => max_steer,
                    _ => return false,
                };
                v.abs() <= spec.alpha + eps && steer.abs() <= max_steer + eps
            }
            Command::Holonomic { vx, vy, omega } => {
                (vx * vx + vy * vy).sqrt() <= spec.alpha + eps
                    && omega.abs() <= spec.max_yaw_rate + eps
            }
        }
    }

    /// Clamp every channel into the spec's limits (planar speed by rescaling).
    pub fn clamp_to(&self, spec: &EmbodimentSpec) -> Command {
        match *self {
            Command::DiffDrive { v, omega } => Command::DiffDrive {
                v: v.clamp(-spec.alpha, spec.alpha),
                omega: omega.clamp(-spec.max_yaw_rate, spec.max_yaw_rate),
            },
            Command::Ackermann { v, steer } => {
                let max_steer = match spec.kinematics {
                    Kinematics::Ackermann { max_steer, .. } => max_steer,
                    _ => 0.0,
                };
                Command::Ackermann {
                    v: v.clamp(-spec.alpha, spec.alpha),
                    steer: steer.clamp(-max_steer, max_steer),
                }
            }
            Command::Holonomic { vx, vy, omega } => {
                let speed = (vx * vx + vy * vy).sqrt();
                let scale = if speed > spec.alpha {
                    spec.alpha / speed
                } else {
                    1.0
                };
                Command::Holonomic {
                    vx: vx * scale,
                    vy: vy * scale,
                    omega: omega.clamp(-spec.max_yaw_rate, spec.max_yaw_rate),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diff_spec() -> EmbodimentSpec {
        EmbodimentSpec {
            id: "test_dd".into(),
            kinematics: Kinematics::DiffDrive,
            alpha: 1.0,
            max_yaw_rate: 2.0,
            body_radius: 0.2,
            sensor: SensorConfig {
                n_rays: 32,
                fov: 2.0,
                max_range: 5.0,
                mount_offset: MountOffset {
                    forward: 0.0,
                    lateral: 0.0,
                    yaw_bias: 0.0,
                },
                noise_std: 0.0,
            },
            control_rate: 4.0,
        }
    }

    #[test]
    fn clamp_respects_limits() {
        let spec = diff_spec();
        let cmd = Command::DiffDrive { v: 3.0, omega: -9.0 }.clamp_to(&spec);
        assert_eq!(cmd, Command::DiffDrive { v: 1.0, omega: -2.0 });
        assert!(cmd.within_limits(&spec));
    }

    #[test]
    fn holonomic_speed_clamped_by_rescaling() {
        let mut spec = diff_spec();
        spec.kinematics = Kinematics::Holonomic;
        let cmd = Command::Holonomic {
            vx: 3.0,
            vy: 4.0,
            omega: 0.0,
        }
        .clamp_to(&spec);
        if let Command::Holonomic { vx, vy, .. } = cmd {
            assert!(((vx * vx + vy * vy).sqrt() - 1.0).abs() < 1e-12);
            // Direction preserved.
            assert!((vy / vx - 4.0 / 3.0).abs() < 1e-12);
        } else {
            panic!("kinematics tag changed by clamp");
        }
    }

    #[test]
    fn command_value_round_trip() {
        let kin = Kinematics::Ackermann {
            wheelbase: 0.4,
            max_steer: 0.5,
        };
        let cmd = Command::Ackermann { v: 0.7, steer: -0.2 };
        let back = Command::from_values(kin, &cmd.values()).unwrap();
        assert_eq!(cmd, back);
        assert_eq!(kin.command_dim(), 2);
    }

    #[test]
    fn ackermann_curvature_bound_exposed() {
        let kin = Kinematics::Ackermann {
            wheelbase: 0.5,
            max_steer: 0.4,
        };
        let kappa = kin.max_curvature().unwrap();
        assert!((kappa - 0.4f64.tan() / 0.5).abs() < 1e-12);
        assert!(Kinematics::DiffDrive.max_curvature().is_none());
    }

    #[test]
    fn roster_speed_span_enforced() {
        let mut a = diff_spec();
        a.id = "a".into();
        a.alpha = 0.5;
        let mut b = diff_spec();
        b.id = "b".into();
        b.alpha = 5.0;
        assert!(validate_roster(&[a.clone(), b.clone()]).is_ok());
        b.alpha = 2.0;
        assert!(validate_roster(&[a, b]).is_err());
    }
}
