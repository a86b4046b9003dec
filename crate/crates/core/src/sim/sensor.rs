//! Range-sensor simulation: a fan of rays with per-embodiment geometry.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::rng::rng_for;
use crate::sim::embodiment::SensorConfig;
use crate::sim::pose::Pose;
use crate::sim::world::WorldMap;

/// One range scan; always `n_rays` values in `[0, max_range]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub ranges: Vec<f64>,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }
}

/// Cast the sensor's ray fan from the pose and return noisy clipped ranges.
///
/// Rays span `fov` end-inclusive, centered on `yaw + yaw_bias`; the origin is
/// displaced by the mount offset in the body frame. Gaussian noise is added
/// per ray and the result clipped back into `[0, max_range]`. Deterministic
/// for a given seed.
pub fn render_observation(
    world: &WorldMap,
    pose: &Pose,
    sensor: &SensorConfig,
    seed: u64,
) -> Observation {
    let (ox, oy) = pose.body_to_world(sensor.mount_offset.forward, sensor.mount_offset.lateral);
    let center = pose.yaw + sensor.mount_offset.yaw_bias;
    let n = sensor.n_rays;
    let mut rng = rng_for(seed, &[]);
    let noise = Normal::new(0.0, sensor.noise_std).expect("noise_std validated non-negative");

    let mut ranges = Vec::with_capacity(n);
    for i in 0..n {
        let frac = if n > 1 {
            i as f64 / (n - 1) as f64
        } else {
            0.5
        };
        let angle = center - 0.5 * sensor.fov + frac * sensor.fov;
        let (s, c) = angle.sin_cos();
        let mut dist = world.boundary_hit(ox, oy, c, s);
        for obs in &world.obstacles {
            if let Some(t) = obs.ray_hit(ox, oy, c, s) {
                dist = dist.min(t);
            }
        }
        dist = dist.min(sensor.max_range);
        if sensor.noise_std > 0.0 {
            dist += noise.sample(&mut rng);
        } else {
            // Keep the stream layout identical whether or not noise is on.
            let _ = rng.gen::<u64>();
        }
        ranges.push(dist.clamp(0.0, sensor.max_range));
    }
    Observation { ranges }
}
