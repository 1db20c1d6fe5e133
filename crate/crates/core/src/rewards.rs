//! Composite shaped reward.
//!
//! Both components compare the evader's actual progress over one step with
//! the best progress physically possible in that step: `r_d` against moving
//! away from every detected pursuer, `r_b` against closing on the nearest
//! wall. The composite `r` is therefore a shortfall, zero for an ideal move
//! and positive otherwise, and the learner is trained on its negation
//! ([`RewardBreakdown::reward`]).

use std::collections::BTreeMap;

use crate::env::ArenaConfig;
use crate::sensing::Detection;

/// Proximity weight of a detected pursuer: 1 at contact, 0 at the edge of range.
#[inline]
pub fn pursuer_weight(d: f64, r_e: f64) -> f64 {
    1.0 - d / r_e
}

/// Previous-step distances of the pursuers detected on that step.
///
/// Only pursuers seen on consecutive steps carry history, so a pursuer that
/// drops out of range and reappears starts over with a zero distance delta.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionHistory {
    prev: BTreeMap<usize, f64>,
}

impl DetectionHistory {
    pub fn from_detections(detections: &[Detection]) -> Self {
        Self {
            prev: detections.iter().map(|d| (d.id, d.distance)).collect(),
        }
    }

    pub fn previous(&self, id: usize) -> Option<f64> {
        self.prev.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.prev.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prev.is_empty()
    }

    pub fn clear(&mut self) {
        self.prev.clear();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PursuerTerm {
    pub r_d: f64,
    pub weights: Vec<f64>,
    pub weight_sum: f64,
    pub m: usize,
}

pub fn reward_pursuers(
    detections: &[Detection],
    hist: &mut DetectionHistory,
    arena: &ArenaConfig,
) -> PursuerTerm {
    let mut r_d = 0.0;
    let mut weights = Vec::with_capacity(detections.len());
    for det in detections {
        let w = pursuer_weight(det.distance, arena.r_e);
        let prev = hist.previous(det.id).unwrap_or(det.distance);
        let v_rel_max = arena.v_e_max - det.speed * det.theta.cos();
        r_d += w * (v_rel_max * arena.dt - (det.distance - prev));
        weights.push(w);
    }
    *hist = DetectionHistory::from_detections(detections);
    PursuerTerm {
        r_d,
        weight_sum: weights.iter().sum(),
        m: detections.len(),
        weights,
    }
}

#[inline]
pub fn reward_boundary(d_b_prev: f64, d_b_now: f64, arena: &ArenaConfig) -> f64 {
    arena.v_e_max * arena.dt - (d_b_prev - d_b_now)
}

#[inline]
pub fn compose_reward(r_b: f64, r_d: f64, weight_sum: f64, m: usize, t_f: f64) -> f64 {
    t_f * (((1.0 - weight_sum) / (1.0 + m as f64)) * r_b + r_d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardBreakdown {
    pub r_d: f64,
    pub r_b: f64,
    pub weights: Vec<f64>,
    pub t_f: f64,
    /// Composite shortfall.
    pub r: f64,
}

impl RewardBreakdown {
    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Composite recomputed from the stored parts.
    pub fn recompose(&self) -> f64 {
        compose_reward(self.r_b, self.r_d, self.weight_sum(), self.m(), self.t_f)
    }

    /// Reward signal handed to the learner.
    #[inline]
    pub fn reward(&self) -> f64 {
        -self.r
    }
}

/// Per-episode reward state: the detection history and last wall distance.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTracker {
    pub history: DetectionHistory,
    pub prev_d_b: f64,
}

impl RewardTracker {
    pub fn new(detections: &[Detection], d_b: f64) -> Self {
        Self {
            history: DetectionHistory::from_detections(detections),
            prev_d_b: d_b,
        }
    }

    /// Score the transition into a state with the given detections, wall
    /// distance and time factor, then roll the history forward.
    pub fn evaluate(
        &mut self,
        detections: &[Detection],
        d_b: f64,
        t_f: f64,
        arena: &ArenaConfig,
    ) -> RewardBreakdown {
        let pt = reward_pursuers(detections, &mut self.history, arena);
        let r_b = reward_boundary(self.prev_d_b, d_b, arena);
        self.prev_d_b = d_b;
        let r = compose_reward(r_b, pt.r_d, pt.weight_sum, pt.m, t_f);
        RewardBreakdown {
            r_d: pt.r_d,
            r_b,
            weights: pt.weights,
            t_f,
            r,
        }
    }
}
