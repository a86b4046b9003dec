//! Velocity-command integration for all kinematics families.

use crate::error::{Error, Result};
use crate::sim::embodiment::{Command, EmbodimentSpec, Kinematics};
use crate::sim::pose::{normalize_angle, Pose};

const SUBSTEPS: usize = 4;

/// Integrate one control period under the embodiment's kinematics.
///
/// Midpoint rule with 4 substeps: headings are advanced to the half-step
/// before displacing, which keeps arc-length error small without a solver.
/// Holonomic planar velocities are body-frame and rotate with the robot.
/// Commands outside the spec's limits are rejected; callers clamp first.
pub fn step_dynamics(pose: &Pose, cmd: &Command, spec: &EmbodimentSpec, dt: f64) -> Result<Pose> {
    if !pose.is_finite() {
        return Err(Error::NonFinite("pose"));
    }
    if !cmd.is_finite() {
        return Err(Error::NonFinite("command"));
    }
    if !(dt > 0.0 && dt <= 0.5) {
        return Err(Error::InvalidArg(format!(
            "dt must lie in (0, 0.5], got {dt}"
        )));
    }
    if !cmd.within_limits(spec) {
        return Err(Error::CommandLimit(format!(
            "{:?} exceeds limits of {}",
            cmd, spec.id
        )));
    }

    // Reduce every family to (body-frame velocity, yaw rate).
    let (bvx, bvy, omega) = match *cmd {
        Command::DiffDrive { v, omega } => (v, 0.0, omega),
        Command::Ackermann { v, steer } => {
            let wheelbase = match spec.kinematics {
                Kinematics::Ackermann { wheelbase, .. } => wheelbase,
                _ => {
                    return Err(Error::CommandLimit(format!(
                        "Ackermann command sent to {}",
                        spec.id
                    )))
                }
            };
            (v, 0.0, v * steer.tan() / wheelbase)
        }
        Command::Holonomic { vx, vy, omega } => (vx, vy, omega),
    };

    let h = dt / SUBSTEPS as f64;
    let mut x = pose.x;
    let mut y = pose.y;
    let mut yaw = pose.yaw;
    for _ in 0..SUBSTEPS {
        let yaw_mid = yaw + 0.5 * omega * h;
        let (s, c) = yaw_mid.sin_cos();
        x += (bvx * c - bvy * s) * h;
        y += (bvx * s + bvy * c) * h;
        yaw += omega * h;
    }
    Ok(Pose::new(x, y, normalize_angle(yaw)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::embodiment::{MountOffset, SensorConfig};
    use rand::Rng;

    fn spec(kinematics: Kinematics, alpha: f64) -> EmbodimentSpec {
        EmbodimentSpec {
            id: "dyn_test".into(),
            kinematics,
            alpha,
            max_yaw_rate: 3.0,
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
    fn straight_line_integration() {
        let spec = spec(Kinematics::DiffDrive, 2.0);
        let next = step_dynamics(
            &Pose::new(0.0, 0.0, 0.0),
            &Command::DiffDrive { v: 1.0, omega: 0.0 },
            &spec,
            0.1,
        )
        .unwrap();
        assert!((next.x - 0.1).abs() < 1e-12);
        assert!(next.y.abs() < 1e-12);
        assert!(next.yaw.abs() < 1e-12);
    }

    #[test]
    fn pure_rotation() {
        let spec = spec(Kinematics::DiffDrive, 2.0);
        let next = step_dynamics(
            &Pose::new(0.0, 0.0, 0.0),
            &Command::DiffDrive { v: 0.0, omega: 1.0 },
            &spec,
            0.1,
        )
        .unwrap();
        assert!(next.x.abs() < 1e-12);
        assert!(next.y.abs() < 1e-12);
        assert!((next.yaw - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_limit_commands() {
        let spec = spec(Kinematics::DiffDrive, 1.0);
        let err = step_dynamics(
            &Pose::new(0.0, 0.0, 0.0),
            &Command::DiffDrive { v: 1.5, omega: 0.0 },
            &spec,
            0.1,
        );
        assert!(err.is_err());
        assert!(step_dynamics(
            &Pose::new(0.0, 0.0, 0.0),
            &Command::DiffDrive { v: 0.5, omega: 0.0 },
            &spec,
            0.6
        )
        .is_err());
    }

    #[test]
    fn ackermann_circle_radius_matches_analytic() {
        let wheelbase = 0.5;
        let steer = 0.4;
        let spec = spec(
            Kinematics::Ackermann {
                wheelbase,
                max_steer: steer,
            },
            2.0,
        );
        let cmd = Command::Ackermann { v: 1.0, steer };
        let analytic_radius = wheelbase / steer.tan();

        // Fine-step integration over one full revolution; the traced points
        // must sit on a circle of the analytic radius.
        let dt = 1e-4;
        let period = 2.0 * std::f64::consts::PI * analytic_radius / 1.0;
        let steps = (period / dt).ceil() as usize;
        let mut pose = Pose::new(0.0, 0.0, 0.0);
        let mut sum = (0.0, 0.0);
        let mut points = Vec::with_capacity(steps);
        for _ in 0..steps {
            pose = step_dynamics(&pose, &cmd, &spec, dt).unwrap();
            sum.0 += pose.x;
            sum.1 += pose.y;
            points.push((pose.x, pose.y));
        }
        let center = (sum.0 / steps as f64, sum.1 / steps as f64);
        let mean_radius: f64 = points
            .iter()
            .map(|(x, y)| ((x - center.0).powi(2) + (y - center.1).powi(2)).sqrt())
            .sum::<f64>()
            / steps as f64;
        assert!(
            (mean_radius - analytic_radius).abs() < 1e-3,
            "integrated radius {mean_radius} vs analytic {analytic_radius}"
        );
    }

    #[test]
    fn speed_bound_and_yaw_range_hold_under_random_commands() {
        let specs = [
            spec(Kinematics::DiffDrive, 1.5),
            spec(
                Kinematics::Ackermann {
                    wheelbase: 0.4,
                    max_steer: 0.5,
                },
                2.5,
            ),
            spec(Kinematics::Holonomic, 3.0),
        ];
        let mut rng = crate::rng::rng_for(5, &[11]);
        for spec in &specs {
            let mut pose = Pose::new(0.0, 0.0, 0.3);
            for _ in 0..500 {
                let raw = match spec.kinematics {
                    Kinematics::DiffDrive => Command::DiffDrive {
                        v: rng.gen_range(-4.0..4.0),
                        omega: rng.gen_range(-5.0..5.0),
                    },
                    Kinematics::Ackermann { .. } => Command::Ackermann {
                        v: rng.gen_range(-4.0..4.0),
                        steer: rng.gen_range(-1.0..1.0),
                    },
                    Kinematics::Holonomic => Command::Holonomic {
                        vx: rng.gen_range(-4.0..4.0),
                        vy: rng.gen_range(-4.0..4.0),
                        omega: rng.gen_range(-5.0..5.0),
                    },
                };
                let cmd = raw.clamp_to(spec);
                let dt = 0.25;
                let next = step_dynamics(&pose, &cmd, spec, dt).unwrap();
                let dist = ((next.x - pose.x).powi(2) + (next.y - pose.y).powi(2)).sqrt();
                assert!(dist / dt <= spec.alpha + 1e-9, "speed bound violated");
                assert!(next.yaw > -std::f64::consts::PI && next.yaw <= std::f64::consts::PI);
                pose = next;
            }
        }
    }
}
