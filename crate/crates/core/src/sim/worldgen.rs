//! Procedural arena generation in three difficulty tiers.
//!
//! Worlds are serpentine: horizontal bands separated by walls with openings
//! at alternating ends, so the route between the shipped start/goal makes a
//! U-turn per band change. Scatter obstacles fill the bands outside a carved
//! clearance channel around the route. Hard worlds additionally receive one
//! deliberately narrow disc-flanked passage in the scatter field and must
//! show at least two >90-degree turns on the verification route.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_for, tag};
use crate::sim::grid::{plan_route, turn_events};
use crate::sim::world::{Difficulty, Obstacle, WorldMap};

/// Largest body radius the generated worlds are guaranteed to admit; the
/// roster validator rejects bigger bodies.
pub const MAX_BODY_RADIUS: f64 = 0.25;

const MARGIN: f64 = 1.0;
const MAX_ATTEMPTS: u32 = 20;

/// Radius of the two discs flanking the hard-tier narrow passage.
const PINCH_RADIUS: f64 = 0.35;

/// Planning inflation used when accepting a candidate world. Larger than any
/// roster body, so every verified route leaves lateral slack for tracking.
const VERIFY_RADIUS: f64 = 0.5;

/// Geometry knobs for one difficulty tier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierParams {
    /// Arena side length, meters (square worlds).
    pub side: f64,
    /// Number of serpentine bands; the route makes bands-1 U-turns.
    pub bands: usize,
    /// Free half-width kept around the route, meters.
    pub clearance: f64,
    /// Width of the wall openings at band ends, meters.
    pub opening: f64,
    pub wall_thickness: f64,
    /// Scatter grid cell size and per-cell placement probability.
    pub scatter_cell: f64,
    pub scatter_prob: f64,
    pub rect_size: (f64, f64),
    pub circle_radius: (f64, f64),
    /// Edge-to-edge gap range of the narrow pinch, when present.
    pub pinch_gap: Option<(f64, f64)>,
    pub goal_radius: f64,
}

/// Per-tier world generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldGenParams {
    pub easy: TierParams,
    pub moderate: TierParams,
    pub hard: TierParams,
}

impl WorldGenParams {
    pub fn tier(&self, difficulty: Difficulty) -> &TierParams {
        match difficulty {
            Difficulty::Easy => &self.easy,
            Difficulty::Moderate => &self.moderate,
            Difficulty::Hard => &self.hard,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (difficulty, tier) in [
            (Difficulty::Easy, &self.easy),
            (Difficulty::Moderate, &self.moderate),
            (Difficulty::Hard, &self.hard),
        ] {
            if tier.bands < 2 || tier.side < 4.0 * MARGIN || tier.clearance <= MAX_BODY_RADIUS {
                return Err(Error::InvalidArg(format!(
                    "world tier {} is degenerate",
                    difficulty.label()
                )));
            }
        }
        if self.hard.side < 3.0 * self.easy.side {
            return Err(Error::InvalidArg(
                "hard worlds must be at least 3x the side length of easy worlds".into(),
            ));
        }
        if self.hard.pinch_gap.is_none() {
            return Err(Error::InvalidArg(
                "hard worlds require a pinch passage".into(),
            ));
        }
        if let Some((lo, hi)) = self.hard.pinch_gap {
            if !(2.0 * (MAX_BODY_RADIUS + 0.07) <= lo && lo <= hi && hi < 3.0 * MAX_BODY_RADIUS) {
                return Err(Error::InvalidArg(format!(
                    "pinch gap range ({lo}, {hi}) must be traversable yet narrower than {}",
                    3.0 * MAX_BODY_RADIUS
                )));
            }
        }
        Ok(())
    }
}

impl Default for WorldGenParams {
    fn default() -> Self {
        WorldGenParams {
            easy: TierParams {
                side: 10.0,
                bands: 2,
                clearance: 1.8,
                opening: 3.4,
                wall_thickness: 0.5,
                scatter_cell: 2.6,
                scatter_prob: 0.4,
                rect_size: (0.5, 1.1),
                circle_radius: (0.28, 0.6),
                pinch_gap: None,
                goal_radius: 0.6,
            },
            moderate: TierParams {
                side: 15.0,
                bands: 3,
                clearance: 1.5,
                opening: 3.0,
                wall_thickness: 0.45,
                scatter_cell: 2.0,
                scatter_prob: 0.55,
                rect_size: (0.45, 1.1),
                circle_radius: (0.25, 0.55),
                pinch_gap: None,
                goal_radius: 0.55,
            },
            hard: TierParams {
                side: 30.0,
                bands: 3,
                clearance: 1.3,
                opening: 2.8,
                wall_thickness: 0.4,
                scatter_cell: 1.9,
                scatter_prob: 0.6,
                rect_size: (0.45, 1.1),
                circle_radius: (0.25, 0.55),
                pinch_gap: Some((0.66, 0.72)),
                goal_radius: 0.55,
            },
        }
    }
}

/// Deterministically generate a world for (difficulty, seed), retrying with
/// derived sub-seeds until the verification route and tier invariants hold.
pub fn generate_world(
    params: &WorldGenParams,
    difficulty: Difficulty,
    seed: u64,
) -> Result<WorldMap> {
    let tier = params.tier(difficulty);
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = rng_for(seed, &[tag::WORLD, difficulty.index(), attempt as u64]);
        let world = build_candidate(tier, difficulty, &mut rng);
        if verify(&world, difficulty).is_ok() {
            return Ok(world);
        }
    }
    Err(Error::WorldGen {
        attempts: MAX_ATTEMPTS,
        reason: format!("{} seed {seed}", difficulty.label()),
    })
}

fn build_candidate(tier: &TierParams, difficulty: Difficulty, rng: &mut ChaCha8Rng) -> WorldMap {
    let s = tier.side;
    let band_h = (s - 2.0 * MARGIN) / tier.bands as f64;

    // Route polyline through jittered band centers, alternating direction.
    let mut band_y = Vec::with_capacity(tier.bands);
    for i in 0..tier.bands {
        let base = MARGIN + (i as f64 + 0.5) * band_h;
        let jitter_span = (0.15 * band_h).min(0.5);
        band_y.push(base + rng.gen_range(-jitter_span..jitter_span));
    }
    let x_left = MARGIN + 0.6 + rng.gen_range(-0.2..0.2);
    let x_right = s - MARGIN - 0.6 + rng.gen_range(-0.2..0.2);
    let mut route: Vec<(f64, f64)> = Vec::new();
    for (i, &y) in band_y.iter().enumerate() {
        if i % 2 == 0 {
            route.push((x_left, y));
            route.push((x_right, y));
        } else {
            route.push((x_right, y));
            route.push((x_left, y));
        }
    }

    // Separator walls with openings at alternating ends.
    let mut obstacles = Vec::new();
    for i in 1..tier.bands {
        let y = MARGIN + i as f64 * band_h;
        let half = 0.5 * tier.wall_thickness;
        let rect = if i % 2 == 1 {
            // Opening at the right end.
            Obstacle::Rect {
                x_min: 0.0,
                y_min: y - half,
                x_max: s - MARGIN - tier.opening,
                y_max: y + half,
            }
        } else {
            Obstacle::Rect {
                x_min: MARGIN + tier.opening,
                y_min: y - half,
                x_max: s,
                y_max: y + half,
            }
        };
        obstacles.push(rect);
    }

    let start = route[0];
    let goal = *route.last().unwrap();

    // Hard tier: a narrow passage between two discs, dropped into the scatter
    // field below the first band. It sits outside the route channel, so the
    // tier keeps its sub-body-diameter gap without funneling every run
    // through it.
    let pinch = tier.pinch_gap.map(|(gap_lo, gap_hi)| {
        let gap = rng.gen_range(gap_lo..gap_hi);
        let t = rng.gen_range(0.35..0.65);
        let (a, b) = (route[0], route[1]);
        let px = a.0 + t * (b.0 - a.0);
        let clear_of_route = a.1 - tier.clearance - 1.2;
        let inside_bounds = 0.45 + 0.5 * gap + 2.0 * PINCH_RADIUS;
        (px, clear_of_route.max(inside_bounds), gap)
    });

    // Scatter obstacles on a jittered grid, rejected near the route channel,
    // the endpoints, and the pinch passage.
    let cells = ((s - 2.0 * MARGIN) / tier.scatter_cell).floor() as usize;
    for gy in 0..cells {
        for gx in 0..cells {
            let place: f64 = rng.gen();
            let cx = MARGIN + (gx as f64 + rng.gen_range(0.25..0.75)) * tier.scatter_cell;
            let cy = MARGIN + (gy as f64 + rng.gen_range(0.25..0.75)) * tier.scatter_cell;
            let circle: bool = rng.gen();
            let (obstacle, reach) = if circle {
                let r = rng.gen_range(tier.circle_radius.0..tier.circle_radius.1);
                (
                    Obstacle::Circle {
                        cx,
                        cy,
                        radius: r,
                    },
                    r,
                )
            } else {
                let w = rng.gen_range(tier.rect_size.0..tier.rect_size.1);
                let h = rng.gen_range(tier.rect_size.0..tier.rect_size.1);
                (
                    Obstacle::Rect {
                        x_min: cx - 0.5 * w,
                        y_min: cy - 0.5 * h,
                        x_max: cx + 0.5 * w,
                        y_max: cy + 0.5 * h,
                    },
                    0.5 * (w * w + h * h).sqrt(),
                )
            };
            // Consume the rng identically whether or not the cell places, so
            // layouts stay stable under probability tweaks.
            if place >= tier.scatter_prob {
                continue;
            }
            if polyline_distance(&route, cx, cy) < tier.clearance + reach {
                continue;
            }
            let d_start = ((cx - start.0).powi(2) + (cy - start.1).powi(2)).sqrt();
            let d_goal = ((cx - goal.0).powi(2) + (cy - goal.1).powi(2)).sqrt();
            if d_start < 1.2 + reach || d_goal < 1.2 + reach {
                continue;
            }
            if let Some((px, py, _)) = pinch {
                if ((cx - px).powi(2) + (cy - py).powi(2)).sqrt() < 1.4 + reach {
                    continue;
                }
            }
            obstacles.push(clip_to_bounds(obstacle, s));
        }
    }

    if let Some((px, py, gap)) = pinch {
        let offset = 0.5 * gap + PINCH_RADIUS;
        for cy in [py - offset, py + offset] {
            obstacles.push(Obstacle::Circle {
                cx: px,
                cy,
                radius: PINCH_RADIUS,
            });
        }
    }

    let start_yaw = (route[1].1 - route[0].1).atan2(route[1].0 - route[0].0);
    WorldMap {
        width: s,
        height: s,
        obstacles,
        goal_radius: tier.goal_radius,
        difficulty_tag: difficulty,
        start_xy: start,
        start_yaw,
        goal_xy: goal,
    }
}

/// Distance from a point to a polyline.
fn polyline_distance(poly: &[(f64, f64)], x: f64, y: f64) -> f64 {
    let mut best = f64::INFINITY;
    for w in poly.windows(2) {
        let (ax, ay) = w[0];
        let (bx, by) = w[1];
        let dx = bx - ax;
        let dy = by - ay;
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 {
            (((x - ax) * dx + (y - ay) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let px = ax + t * dx;
        let py = ay + t * dy;
        best = best.min(((x - px).powi(2) + (y - py).powi(2)).sqrt());
    }
    best
}

fn clip_to_bounds(obstacle: Obstacle, side: f64) -> Obstacle {
    match obstacle {
        Obstacle::Rect {
            x_min,
            y_min,
            x_max,
            y_max,
        } => Obstacle::Rect {
            x_min: x_min.max(0.0),
            y_min: y_min.max(0.0),
            x_max: x_max.min(side),
            y_max: y_max.min(side),
        },
        Obstacle::Circle { cx, cy, radius } => {
            // Shrink circles that poke outside rather than shifting them, so
            // clearance reasoning stays valid.
            let max_r = cx.min(cy).min(side - cx).min(side - cy).max(0.05);
            Obstacle::Circle {
                cx,
                cy,
                radius: radius.min(max_r),
            }
        }
    }
}

/// Check the tier invariants on a candidate world.
fn verify(world: &WorldMap, difficulty: Difficulty) -> Result<()> {
    let route = plan_route(world, VERIFY_RADIUS, world.start_xy, world.goal_xy)?;
    if difficulty == Difficulty::Hard {
        let sharp = turn_events(&route, 0.3)
            .iter()
            .filter(|a| a.abs() > std::f64::consts::FRAC_PI_2)
            .count();
        if sharp < 2 {
            return Err(Error::Infeasible);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::grid::path_length;

    #[test]
    fn generation_is_deterministic() {
        let params = WorldGenParams::default();
        let a = generate_world(&params, Difficulty::Easy, 7).unwrap();
        let b = generate_world(&params, Difficulty::Easy, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_world(&params, Difficulty::Easy, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn hard_side_at_least_three_times_easy() {
        let params = WorldGenParams::default();
        let easy = generate_world(&params, Difficulty::Easy, 3).unwrap();
        let hard = generate_world(&params, Difficulty::Hard, 3).unwrap();
        assert!(hard.width >= 3.0 * easy.width);
        assert!(hard.height >= 3.0 * easy.height);
        params.validate().unwrap();
    }

    #[test]
    fn all_obstacles_inside_bounds() {
        let params = WorldGenParams::default();
        for difficulty in Difficulty::ALL {
            let world = generate_world(&params, difficulty, 11).unwrap();
            for obs in &world.obstacles {
                match *obs {
                    Obstacle::Rect {
                        x_min,
                        y_min,
                        x_max,
                        y_max,
                    } => {
                        assert!(x_min >= 0.0 && y_min >= 0.0);
                        assert!(x_max <= world.width && y_max <= world.height);
                    }
                    Obstacle::Circle { cx, cy, radius } => {
                        assert!(cx - radius >= -1e-9 && cy - radius >= -1e-9);
                        assert!(cx + radius <= world.width + 1e-9);
                        assert!(cy + radius <= world.height + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn moderate_worlds_admit_routes_across_seeds() {
        let params = WorldGenParams::default();
        for seed in 0..20 {
            let world = generate_world(&params, Difficulty::Moderate, seed).unwrap();
            let route = plan_route(&world, MAX_BODY_RADIUS, world.start_xy, world.goal_xy)
                .expect("verified world must stay plannable");
            assert!(path_length(&route) > world.width);
        }
    }

    #[test]
    fn hard_worlds_have_pinch_and_sharp_turns() {
        let params = WorldGenParams::default();
        for seed in 0..6 {
            let world = generate_world(&params, Difficulty::Hard, seed).unwrap();
            // The flanking pinch circles sit closer than 3x the widest body.
            let mut min_gap = f64::INFINITY;
            for (i, a) in world.obstacles.iter().enumerate() {
                for b in world.obstacles.iter().skip(i + 1) {
                    if let (
                        Obstacle::Circle {
                            cx: ax,
                            cy: ay,
                            radius: ar,
                        },
                        Obstacle::Circle {
                            cx: bx,
                            cy: by,
                            radius: br,
                        },
                    ) = (a, b)
                    {
                        let d = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt() - ar - br;
                        min_gap = min_gap.min(d);
                    }
                }
            }
            assert!(
                min_gap < 3.0 * MAX_BODY_RADIUS,
                "seed {seed}: narrowest circle gap {min_gap}"
            );

            let route = plan_route(&world, MAX_BODY_RADIUS, world.start_xy, world.goal_xy).unwrap();
            let sharp = turn_events(&route, 0.3)
                .iter()
                .filter(|a| a.abs() > std::f64::consts::FRAC_PI_2)
                .count();
            assert!(sharp >= 2, "seed {seed}: {sharp} sharp turns");
        }
    }

    #[test]
    fn start_and_goal_are_free_for_largest_body() {
        let params = WorldGenParams::default();
        for difficulty in Difficulty::ALL {
            let world = generate_world(&params, difficulty, 2).unwrap();
            let start = world.start_pose();
            assert!(!crate::sim::world::check_collision(
                &world,
                &start,
                MAX_BODY_RADIUS
            ));
            let goal = crate::sim::pose::Pose::new(world.goal_xy.0, world.goal_xy.1, 0.0);
            assert!(!crate::sim::world::check_collision(
                &world,
                &goal,
                MAX_BODY_RADIUS
            ));
        }
    }
}
