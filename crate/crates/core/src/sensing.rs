//! Evader sensing: a noise-free lidar over pursuer discs, a ray scan of the
//! known arena boundary, the decaying time factor, and the encoded state
//! vector fed to the actor and critic.
//!
//! Rays are cast in the evader-centred frame with axes parallel to the world
//! axes: ray `k` points at angle `2*pi*k / n_s` from +x. The actor outputs
//! world-frame velocities, so the observation shares that frame.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::env::{ArenaConfig, WorldState};
use crate::geom::Vec2;

/// Smallest range a lidar ray can report.
pub const MIN_RANGE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingConfig {
    pub n_s: usize,
    pub k_s: f64,
    pub w_l: f64,
    pub w_b: f64,
    /// Normalization distance for the boundary scan.
    pub r_b_norm: f64,
}

impl SensingConfig {
    pub fn full() -> Self {
        Self {
            n_s: 72,
            k_s: 1.0,
            w_l: 1.0,
            w_b: 1.0,
            r_b_norm: 200.0,
        }
    }

    pub fn desk() -> Self {
        Self {
            n_s: 36,
            ..Self::full()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_s < 4 {
            return Err("n_s must be at least 4".into());
        }
        if !(self.k_s > 0.0 && self.r_b_norm > 0.0) {
            return Err("k_s and r_b_norm must be > 0".into());
        }
        if !(self.w_l >= 0.0 && self.w_b >= 0.0 && self.w_l + self.w_b > 0.0) {
            return Err("weights must be non-negative with a positive sum".into());
        }
        Ok(())
    }
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self::desk()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan {
    pub ranges: Vec<f64>,
}

impl LidarScan {
    pub fn n_s(&self) -> usize {
        self.ranges.len()
    }

    pub fn ray_angle(&self, k: usize) -> f64 {
        TAU * k as f64 / self.ranges.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub id: usize,
    pub distance: f64,
    /// World-frame angle from the evader to the pursuer.
    pub bearing: f64,
    pub speed: f64,
    /// Angle between the pursuer's heading and its line of sight to the evader.
    pub theta: f64,
}

pub type DetectionSet = Vec<Detection>;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryScan {
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub values: Vec<f64>,
    pub t_f: f64,
}

/// Unit directions of the `n_s` rays.
pub fn ray_directions(n_s: usize) -> Vec<Vec2> {
    (0..n_s)
        .map(|k| Vec2::from_angle(TAU * k as f64 / n_s as f64))
        .collect()
}

/// Pursuers whose centre lies within the evader's sensor range, in list order.
pub fn detect(w: &WorldState, arena: &ArenaConfig) -> DetectionSet {
    let e = w.evader.position;
    w.pursuers
        .iter()
        .enumerate()
        .filter_map(|(id, p)| {
            let offset = p.position - e;
            let distance = offset.norm();
            if distance > arena.r_e {
                return None;
            }
            let theta = if distance > 0.0 {
                let los = (-offset) * (1.0 / distance);
                Vec2::from_angle(p.heading).dot(los).clamp(-1.0, 1.0).acos()
            } else {
                0.0
            };
            Some(Detection {
                id,
                distance,
                bearing: offset.angle(),
                speed: p.speed,
                theta,
            })
        })
        .collect()
}

/// Distance along `dir` from `origin` to the first intersection with a disc,
/// if the ray hits it in front of the origin.
fn ray_disc(origin: Vec2, dir: Vec2, center: Vec2, radius: f64) -> Option<f64> {
    let f = center - origin;
    let tca = f.dot(dir);
    let d2 = f.norm_sq() - tca * tca;
    let r2 = radius * radius;
    if d2 > r2 {
        return None;
    }
    let thc = (r2 - d2).sqrt();
    let far = tca + thc;
    if far <= 0.0 {
        return None;
    }
    // origin inside the disc reports contact
    Some((tca - thc).max(MIN_RANGE))
}

/// Lidar scan over pursuers modelled as discs of radius `capture_radius / 2`,
/// together with the detection set.
pub fn cast_rays(
    w: &WorldState,
    arena: &ArenaConfig,
    sensing: &SensingConfig,
) -> (LidarScan, DetectionSet) {
    let e = w.evader.position;
    let radius = 0.5 * arena.capture_radius;
    let reach = arena.r_e + radius;
    let near: Vec<Vec2> = w
        .pursuers
        .iter()
        .map(|p| p.position)
        .filter(|p| p.distance(e) <= reach)
        .collect();
    let ranges = ray_directions(sensing.n_s)
        .into_iter()
        .map(|dir| {
            near.iter()
                .filter_map(|&c| ray_disc(e, dir, c, radius))
                .fold(arena.r_e, f64::min)
        })
        .collect();
    (LidarScan { ranges }, detect(w, arena))
}

pub fn encode_lidar(scan: &LidarScan, r_e: f64, sensing: &SensingConfig) -> Vec<f64> {
    scan.ranges
        .iter()
        .map(|z| sensing.k_s * (z / r_e))
        .collect()
}

/// Distance along each ray to the arena boundary; all zeros once the evader
/// is outside.
pub fn boundary_scan(pos: Vec2, arena: &ArenaConfig, n_s: usize) -> BoundaryScan {
    if !arena.contains(pos) {
        return BoundaryScan {
            distances: vec![0.0; n_s],
        };
    }
    let axis = |p: f64, u: f64, half: f64| {
        if u > 0.0 {
            (half - p) / u
        } else if u < 0.0 {
            (-half - p) / u
        } else {
            f64::INFINITY
        }
    };
    let distances = ray_directions(n_s)
        .into_iter()
        .map(|u| {
            axis(pos.x, u.x, arena.half_width)
                .min(axis(pos.y, u.y, arena.half_height))
                .max(0.0)
        })
        .collect();
    BoundaryScan { distances }
}

pub fn encode_boundary(scan: &BoundaryScan, sensing: &SensingConfig) -> Vec<f64> {
    scan.distances
        .iter()
        .map(|b| sensing.k_s * (1.0 - b / sensing.r_b_norm))
        .collect()
}

/// Urgency factor decaying linearly from 0.5 at the start to 0 at `t_max`.
///
/// Panics if `t` lies outside `[0, t_max]`.
pub fn time_factor(t: f64, t_max: f64) -> f64 {
    assert!(
        t >= 0.0 && t <= t_max * (1.0 + 1e-12),
        "time {t} outside [0, {t_max}]"
    );
    ((1.0 - t / t_max) / 2.0).max(0.0)
}

pub fn encode_state(
    lidar_enc: &[f64],
    boundary_enc: &[f64],
    t_f: f64,
    sensing: &SensingConfig,
) -> StateVector {
    assert_eq!(lidar_enc.len(), boundary_enc.len());
    let (wl, wb) = (sensing.w_l, sensing.w_b);
    let values = lidar_enc
        .iter()
        .zip(boundary_enc)
        .map(|(l, b)| t_f * (wl * l + wb * b) / (wl + wb))
        .collect();
    StateVector { values, t_f }
}

/// Perpendicular distance to the closest wall and the unit direction toward
/// it. Ties resolve in the order east, west, north, south.
pub fn nearest_boundary(pos: Vec2, arena: &ArenaConfig) -> (f64, Vec2) {
    let walls = [
        (arena.half_width - pos.x, Vec2::new(1.0, 0.0)),
        (arena.half_width + pos.x, Vec2::new(-1.0, 0.0)),
        (arena.half_height - pos.y, Vec2::new(0.0, 1.0)),
        (arena.half_height + pos.y, Vec2::new(0.0, -1.0)),
    ];
    let (d, dir) = walls
        .into_iter()
        .fold((f64::INFINITY, Vec2::ZERO), |best, w| {
            if w.0 < best.0 {
                w
            } else {
                best
            }
        });
    (d.max(0.0), dir)
}

pub fn nearest_boundary_distance(pos: Vec2, arena: &ArenaConfig) -> f64 {
    if !arena.contains(pos) {
        return 0.0;
    }
    nearest_boundary(pos, arena).0
}

/// Everything the evader perceives at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub lidar: LidarScan,
    pub detections: DetectionSet,
    pub boundary: BoundaryScan,
    pub d_b: f64,
    pub boundary_dir: Vec2,
    pub state: StateVector,
}

pub fn observe(w: &WorldState, arena: &ArenaConfig, sensing: &SensingConfig) -> Observation {
    let (lidar, detections) = cast_rays(w, arena, sensing);
    let pos = w.evader.position;
    let boundary = boundary_scan(pos, arena, sensing.n_s);
    let (_, boundary_dir) = nearest_boundary(pos, arena);
    let d_b = nearest_boundary_distance(pos, arena);
    let t_f = time_factor(w.t, arena.t_max);
    let state = encode_state(
        &encode_lidar(&lidar, arena.r_e, sensing),
        &encode_boundary(&boundary, sensing),
        t_f,
        sensing,
    );
    Observation {
        lidar,
        detections,
        boundary,
        d_b,
        boundary_dir,
        state,
    }
}
