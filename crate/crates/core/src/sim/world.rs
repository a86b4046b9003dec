//! World geometry: bounded arenas with rectangle/circle obstacles.

use serde::{Deserialize, Serialize};

use crate::sim::pose::Pose;

/// Environment tier; harder tiers are larger with tighter passages and more
/// turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Moderate,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard];

    pub fn label(&self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Moderate => "moderate",
            Difficulty::Hard => "hard",
        }
    }

    /// Stable index used for seed derivation.
    pub fn index(&self) -> u64 {
        match self {
            Difficulty::Easy => 0,
            Difficulty::Moderate => 1,
            Difficulty::Hard => 2,
        }
    }

    /// Inverse of `label`.
    pub fn parse(text: &str) -> crate::error::Result<Difficulty> {
        Difficulty::ALL
            .into_iter()
            .find(|d| d.label() == text)
            .ok_or_else(|| crate::error::Error::InvalidArg(format!("unknown tier: {text}")))
    }
}

/// A solid obstacle in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Obstacle {
    Rect {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },
    Circle { cx: f64, cy: f64, radius: f64 },
}

impl Obstacle {
    /// True when the disc at (x, y) with `radius` overlaps this obstacle.
    pub fn overlaps_disc(&self, x: f64, y: f64, radius: f64) -> bool {
        match *self {
            Obstacle::Rect {
                x_min,
                y_min,
                x_max,
                y_max,
            } => {
                let nx = x.clamp(x_min, x_max);
                let ny = y.clamp(y_min, y_max);
                let dx = x - nx;
                let dy = y - ny;
                dx * dx + dy * dy <= radius * radius
            }
            Obstacle::Circle { cx, cy, radius: r } => {
                let dx = x - cx;
                let dy = y - cy;
                let reach = radius + r;
                dx * dx + dy * dy <= reach * reach
            }
        }
    }

    /// True when the bare point (x, y) lies inside the obstacle.
    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        self.overlaps_disc(x, y, 0.0)
    }

    /// Distance along the unit ray (ox, oy) + t·(dx, dy) to the first hit,
    /// if any.
    pub fn ray_hit(&self, ox: f64, oy: f64, dx: f64, dy: f64) -> Option<f64> {
        match *self {
            Obstacle::Rect {
                x_min,
                y_min,
                x_max,
                y_max,
            } => {
                // Slab intersection; handles axis-parallel rays via infinities.
                let inv_x = 1.0 / dx;
                let inv_y = 1.0 / dy;
                let (tx1, tx2) = ((x_min - ox) * inv_x, (x_max - ox) * inv_x);
                let (ty1, ty2) = ((y_min - oy) * inv_y, (y_max - oy) * inv_y);
                let t_enter = tx1.min(tx2).max(ty1.min(ty2));
                let t_exit = tx1.max(tx2).min(ty1.max(ty2));
                if t_exit < t_enter.max(0.0) || t_exit < 0.0 {
                    None
                } else {
                    Some(t_enter.max(0.0))
                }
            }
            Obstacle::Circle { cx, cy, radius } => {
                let fx = ox - cx;
                let fy = oy - cy;
                let b = fx * dx + fy * dy;
                let c = fx * fx + fy * fy - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                let t1 = -b - sq;
                let t2 = -b + sq;
                if t1 >= 0.0 {
                    Some(t1)
                } else if t2 >= 0.0 {
                    // Origin inside the circle.
                    Some(0.0)
                } else {
                    None
                }
            }
        }
    }
}

/// A bounded 2D arena. The boundary itself is solid: leaving it counts as a
/// collision and rays terminate on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldMap {
    pub width: f64,
    pub height: f64,
    pub obstacles: Vec<Obstacle>,
    pub goal_radius: f64,
    pub difficulty_tag: Difficulty,
    /// Route endpoints chosen at generation time; episodes and expert
    /// traversals run between them.
    pub start_xy: (f64, f64),
    pub start_yaw: f64,
    pub goal_xy: (f64, f64),
}

impl WorldMap {
    pub fn start_pose(&self) -> Pose {
        Pose::new(self.start_xy.0, self.start_xy.1, self.start_yaw)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && x <= self.width && y >= 0.0 && y <= self.height
    }

    /// Distance from an interior origin along the unit ray to the boundary.
    pub fn boundary_hit(&self, ox: f64, oy: f64, dx: f64, dy: f64) -> f64 {
        let mut t = f64::INFINITY;
        if dx > 0.0 {
            t = t.min((self.width - ox) / dx);
        } else if dx < 0.0 {
            t = t.min(-ox / dx);
        }
        if dy > 0.0 {
            t = t.min((self.height - oy) / dy);
        } else if dy < 0.0 {
            t = t.min(-oy / dy);
        }
        t.max(0.0)
    }
}

/// True iff the body disc at the pose overlaps any obstacle or leaves the
/// arena.
pub fn check_collision(world: &WorldMap, pose: &Pose, body_radius: f64) -> bool {
    let (x, y) = (pose.x, pose.y);
    if x - body_radius < 0.0
        || y - body_radius < 0.0
        || x + body_radius > world.width
        || y + body_radius > world.height
    {
        return true;
    }
    world
        .obstacles
        .iter()
        .any(|obs| obs.overlaps_disc(x, y, body_radius))
}
