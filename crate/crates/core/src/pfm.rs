//! Potential-field planner: inverse-square repulsion from each detected
//! pursuer plus inverse-square attraction toward the nearest wall point,
//! normalized to a full-speed velocity command.

use serde::{Deserialize, Serialize};

use crate::env::{ArenaConfig, WorldState};
use crate::geom::Vec2;
use crate::sensing::{Detection, Observation};

/// Forces weaker than this produce no motion.
pub const NULL_FORCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PfmGains {
    pub k_p: f64,
    pub k_b: f64,
    /// Distances are floored here before squaring.
    pub singularity_floor: f64,
}

impl Default for PfmGains {
    fn default() -> Self {
        Self {
            k_p: 1.0,
            k_b: 1.0,
            singularity_floor: 0.5,
        }
    }
}

impl PfmGains {
    pub fn validate(&self) -> Result<(), String> {
        if self.k_p > 0.0 && self.k_b > 0.0 && self.singularity_floor > 0.0 {
            Ok(())
        } else {
            Err("pfm gains and singularity_floor must be > 0".into())
        }
    }
}

pub fn net_force(detections: &[Detection], d_b: f64, boundary_dir: Vec2, gains: &PfmGains) -> Vec2 {
    let floor = gains.singularity_floor;
    let mut f = Vec2::ZERO;
    for d in detections {
        let away = -Vec2::from_angle(d.bearing);
        let r = d.distance.max(floor);
        f += away * (gains.k_p / (r * r));
    }
    let r = d_b.max(floor);
    f + boundary_dir * (gains.k_b / (r * r))
}

pub fn pfm_action(force: Vec2, v_e_max: f64) -> Vec2 {
    let n = force.norm();
    if n < NULL_FORCE {
        Vec2::ZERO
    } else {
        force * (v_e_max / n)
    }
}

/// A hand-written evader controller usable as a baseline or a scaffold.
pub trait Planner: Send + Sync {
    /// World-frame velocity command for the current observation.
    fn plan(&self, world: &WorldState, obs: &Observation, arena: &ArenaConfig) -> Vec2;
}

#[derive(Debug, Clone, Default)]
pub struct PotentialField {
    pub gains: PfmGains,
}

impl PotentialField {
    pub fn new(gains: PfmGains) -> Self {
        Self { gains }
    }
}

impl Planner for PotentialField {
    fn plan(&self, _world: &WorldState, obs: &Observation, arena: &ArenaConfig) -> Vec2 {
        let f = net_force(&obs.detections, obs.d_b, obs.boundary_dir, &self.gains);
        pfm_action(f, arena.v_e_max)
    }
}
