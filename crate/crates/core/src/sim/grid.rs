//! Occupancy-grid planning: rasterization, A*, and line-of-sight smoothing.
//!
//! Used twice: world generation proves every shipped world admits a route,
//! and the scripted expert plans the path it then tracks.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::sim::world::{Obstacle, WorldMap};

/// Grid cell edge length in meters.
pub const GRID_RESOLUTION: f64 = 0.05;

/// Extra inflation beyond the body radius when planning, meters.
pub const PLAN_MARGIN: f64 = 0.03;

/// Boolean occupancy raster of a world, inflated by a disc radius.
pub struct OccupancyGrid {
    pub nx: usize,
    pub ny: usize,
    pub resolution: f64,
    occupied: Vec<bool>,
}

impl OccupancyGrid {
    /// Rasterize the world; a cell is occupied when a disc of
    /// `inflation_radius` at its center would collide.
    pub fn build(world: &WorldMap, inflation_radius: f64, resolution: f64) -> OccupancyGrid {
        let nx = (world.width / resolution).ceil() as usize;
        let ny = (world.height / resolution).ceil() as usize;
        let mut occupied = vec![false; nx * ny];

        // Border band: cells whose center sits within the inflation radius of
        // a wall.
        let band = (inflation_radius / resolution).ceil() as usize + 1;
        for iy in 0..ny {
            for ix in 0..nx {
                if ix >= band && ix < nx - band && iy >= band && iy < ny - band {
                    continue;
                }
                let (cx, cy) = center(ix, iy, resolution);
                if cx - inflation_radius < 0.0
                    || cy - inflation_radius < 0.0
                    || cx + inflation_radius > world.width
                    || cy + inflation_radius > world.height
                {
                    occupied[iy * nx + ix] = true;
                }
            }
        }

        // Per-obstacle rasterization bounded to the inflated bounding box.
        for obs in &world.obstacles {
            let (x0, y0, x1, y1) = match *obs {
                Obstacle::Rect {
                    x_min,
                    y_min,
                    x_max,
                    y_max,
                } => (x_min, y_min, x_max, y_max),
                Obstacle::Circle { cx, cy, radius } => {
                    (cx - radius, cy - radius, cx + radius, cy + radius)
                }
            };
            let ix0 = (((x0 - inflation_radius) / resolution).floor().max(0.0)) as usize;
            let iy0 = (((y0 - inflation_radius) / resolution).floor().max(0.0)) as usize;
            let ix1 = ((((x1 + inflation_radius) / resolution).ceil()) as usize).min(nx - 1);
            let iy1 = ((((y1 + inflation_radius) / resolution).ceil()) as usize).min(ny - 1);
            for iy in iy0..=iy1 {
                for ix in ix0..=ix1 {
                    if occupied[iy * nx + ix] {
                        continue;
                    }
                    let (cx, cy) = center(ix, iy, resolution);
                    if obs.overlaps_disc(cx, cy, inflation_radius) {
                        occupied[iy * nx + ix] = true;
                    }
                }
            }
        }

        OccupancyGrid {
            nx,
            ny,
            resolution,
            occupied,
        }
    }

    pub fn is_occupied(&self, ix: usize, iy: usize) -> bool {
        self.occupied[iy * self.nx + ix]
    }

    pub fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let ix = ((x / self.resolution) as isize).clamp(0, self.nx as isize - 1) as usize;
        let iy = ((y / self.resolution) as isize).clamp(0, self.ny as isize - 1) as usize;
        (ix, iy)
    }

    pub fn center_of(&self, ix: usize, iy: usize) -> (f64, f64) {
        center(ix, iy, self.resolution)
    }

    /// Nearest free cell to (x, y) within `max_dist`, by squared cell
    /// distance then index order.
    pub fn nearest_free(&self, x: f64, y: f64, max_dist: f64) -> Option<(usize, usize)> {
        let (cx, cy) = self.cell_of(x, y);
        if !self.is_occupied(cx, cy) {
            return Some((cx, cy));
        }
        let r = (max_dist / self.resolution).ceil() as isize;
        let mut best: Option<(i64, (usize, usize))> = None;
        for dy in -r..=r {
            for dx in -r..=r {
                let ix = cx as isize + dx;
                let iy = cy as isize + dy;
                if ix < 0 || iy < 0 || ix >= self.nx as isize || iy >= self.ny as isize {
                    continue;
                }
                let (ix, iy) = (ix as usize, iy as usize);
                if self.is_occupied(ix, iy) {
                    continue;
                }
                let d2 = (dx * dx + dy * dy) as i64;
                match best {
                    Some((bd2, _)) if bd2 <= d2 => {}
                    _ => best = Some((d2, (ix, iy))),
                }
            }
        }
        best.map(|(_, cell)| cell)
    }

    /// Straight-segment visibility between two points, sampled at half-cell
    /// steps.
    pub fn line_of_sight(&self, a: (f64, f64), b: (f64, f64)) -> bool {
        let dx = b.0 - a.0;
        let dy = b.1 - a.1;
        let dist = (dx * dx + dy * dy).sqrt();
        let steps = (dist / (0.5 * self.resolution)).ceil().max(1.0) as usize;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let (ix, iy) = self.cell_of(a.0 + t * dx, a.1 + t * dy);
            if self.is_occupied(ix, iy) {
                return false;
            }
        }
        true
    }
}

fn center(ix: usize, iy: usize, resolution: f64) -> (f64, f64) {
    (
        (ix as f64 + 0.5) * resolution,
        (iy as f64 + 0.5) * resolution,
    )
}

#[derive(PartialEq)]
struct HeapEntry {
    f: f64,
    idx: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap via reversed comparison; ties broken by lowest cell index
        // for determinism.
        other
            .f
            .partial_cmp(&self.f)
            .unwrap()
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// 8-connected A* between grid cells. Diagonal moves cost sqrt(2) and are
/// blocked when either adjacent orthogonal cell is occupied.
pub fn astar(
    grid: &OccupancyGrid,
    start: (usize, usize),
    goal: (usize, usize),
) -> Option<Vec<(usize, usize)>> {
    let nx = grid.nx;
    let n = nx * grid.ny;
    let start_idx = start.1 * nx + start.0;
    let goal_idx = goal.1 * nx + goal.0;
    if grid.is_occupied(start.0, start.1) || grid.is_occupied(goal.0, goal.1) {
        return None;
    }

    let octile = |idx: usize| -> f64 {
        let ix = (idx % nx) as f64;
        let iy = (idx / nx) as f64;
        let dx = (ix - goal.0 as f64).abs();
        let dy = (iy - goal.1 as f64).abs();
        dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)
    };

    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[start_idx] = 0.0;
    open.push(HeapEntry {
        f: octile(start_idx),
        idx: start_idx,
    });

    const MOVES: [(isize, isize, f64); 8] = [
        (1, 0, 1.0),
        (-1, 0, 1.0),
        (0, 1, 1.0),
        (0, -1, 1.0),
        (1, 1, std::f64::consts::SQRT_2),
        (1, -1, std::f64::consts::SQRT_2),
        (-1, 1, std::f64::consts::SQRT_2),
        (-1, -1, std::f64::consts::SQRT_2),
    ];

    while let Some(HeapEntry { idx, .. }) = open.pop() {
        if closed[idx] {
            continue;
        }
        closed[idx] = true;
        if idx == goal_idx {
            let mut path = Vec::new();
            let mut cur = idx;
            while cur != usize::MAX {
                path.push((cur % nx, cur / nx));
                cur = parent[cur];
            }
            path.reverse();
            return Some(path);
        }
        let ix = (idx % nx) as isize;
        let iy = (idx / nx) as isize;
        for &(mx, my, cost) in &MOVES {
            let jx = ix + mx;
            let jy = iy + my;
            if jx < 0 || jy < 0 || jx >= nx as isize || jy >= grid.ny as isize {
                continue;
            }
            let (jxu, jyu) = (jx as usize, jy as usize);
            if grid.is_occupied(jxu, jyu) {
                continue;
            }
            if mx != 0 && my != 0 {
                // No corner cutting.
                if grid.is_occupied(jxu, iy as usize) || grid.is_occupied(ix as usize, jyu) {
                    continue;
                }
            }
            let jdx = jyu * nx + jxu;
            let cand = g[idx] + cost;
            if cand < g[jdx] - 1e-12 {
                g[jdx] = cand;
                parent[jdx] = idx;
                open.push(HeapEntry {
                    f: cand + octile(jdx),
                    idx: jdx,
                });
            }
        }
    }
    None
}

/// Greedy line-of-sight shortcutting of a cell path into a sparse polyline.
pub fn smooth_path(grid: &OccupancyGrid, cells: &[(usize, usize)]) -> Vec<(f64, f64)> {
    let pts: Vec<(f64, f64)> = cells
        .iter()
        .map(|&(ix, iy)| grid.center_of(ix, iy))
        .collect();
    if pts.len() <= 2 {
        return pts;
    }
    let mut out = vec![pts[0]];
    let mut i = 0;
    while i + 1 < pts.len() {
        let mut j = pts.len() - 1;
        while j > i + 1 && !grid.line_of_sight(pts[i], pts[j]) {
            j -= 1;
        }
        out.push(pts[j]);
        i = j;
    }
    out
}

/// Plan a smoothed collision-free route between two world points for a body
/// of the given radius. The endpoints are snapped to nearby free cells, then
/// restored exactly when visible.
pub fn plan_route(
    world: &WorldMap,
    body_radius: f64,
    start: (f64, f64),
    goal: (f64, f64),
) -> Result<Vec<(f64, f64)>> {
    let grid = OccupancyGrid::build(world, body_radius + PLAN_MARGIN, GRID_RESOLUTION);
    let start_cell = grid
        .nearest_free(start.0, start.1, 0.5)
        .ok_or(Error::Infeasible)?;
    let goal_cell = grid
        .nearest_free(goal.0, goal.1, 0.5)
        .ok_or(Error::Infeasible)?;
    let cells = astar(&grid, start_cell, goal_cell).ok_or(Error::Infeasible)?;
    let mut route = smooth_path(&grid, &cells);
    if let Some(first) = route.first_mut() {
        if grid.line_of_sight(start, grid.center_of(start_cell.0, start_cell.1)) {
            *first = start;
        }
    }
    if let Some(last) = route.last_mut() {
        if grid.line_of_sight(grid.center_of(goal_cell.0, goal_cell.1), goal) {
            *last = goal;
        }
    }
    Ok(route)
}

/// Total length of a polyline.
pub fn path_length(path: &[(f64, f64)]) -> f64 {
    path.windows(2)
        .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
        .sum()
}

/// Accumulated signed turn angles along a polyline, one entry per monotone
/// turning run. Segments shorter than `min_seg` are merged away first.
pub fn turn_events(path: &[(f64, f64)], min_seg: f64) -> Vec<f64> {
    // Thin out short segments.
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for &p in path {
        if let Some(&last) = pts.last() {
            let d = ((p.0 - last.0).powi(2) + (p.1 - last.1).powi(2)).sqrt();
            if d < min_seg {
                continue;
            }
        }
        pts.push(p);
    }
    if pts.len() < 3 {
        return Vec::new();
    }
    let headings: Vec<f64> = pts
        .windows(2)
        .map(|w| (w[1].1 - w[0].1).atan2(w[1].0 - w[0].0))
        .collect();
    let mut events = Vec::new();
    let mut run = 0.0f64;
    for w in headings.windows(2) {
        let delta = crate::sim::pose::normalize_angle(w[1] - w[0]);
        if run == 0.0 || delta == 0.0 || delta.signum() == run.signum() {
            run += delta;
        } else {
            if run.abs() > 1e-9 {
                events.push(run);
            }
            run = delta;
        }
    }
    if run.abs() > 1e-9 {
        events.push(run);
    }
    events
}
