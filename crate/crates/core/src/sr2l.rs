//! Planner-scaffolded action selection.
//!
//! Each training step the actor's sampled action and the planner's action are
//! both scored by a one-step forward model. The percentage gap `D_f` between
//! the two estimated rewards decides which action is executed: the actor's
//! when `D_f >= -beta`, the planner's otherwise. On the planner branch the
//! stored reward is the actor's estimate minus the size of the gap, so the
//! stored reward never exceeds the actor's own estimate.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{step_evader, ArenaConfig, EnvError, EpisodeOutcome, WorldState};
use crate::episode::Episode;
use crate::geom::Vec2;
use crate::neural::{forward_actor, Branch, ExperienceTuple, Mlp, NeuralError};
use crate::pfm::Planner;
use crate::rewards::{RewardBreakdown, RewardTracker};
use crate::sensing::{detect, nearest_boundary_distance, time_factor};

#[derive(Debug, thiserror::Error)]
pub enum Sr2lError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaffoldConfig {
    /// Tolerated shortfall of the actor, in percent.
    pub beta: f64,
    pub epsilon: f64,
    /// Store the executed action (true) or always the actor's action.
    pub store_executed_action: bool,
}

impl Default for ScaffoldConfig {
    fn default() -> Self {
        Self {
            beta: 20.0,
            epsilon: 1e-6,
            store_executed_action: true,
        }
    }
}

impl ScaffoldConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.beta >= 0.0 && self.epsilon > 0.0) {
            return Err("need beta >= 0 and epsilon > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaffoldDecision {
    pub r_r: f64,
    pub r_p: f64,
    pub d_f: f64,
    pub executed: Branch,
    pub stored_reward: f64,
}

/// Percentage by which the actor's reward trails (negative) or beats
/// (positive) the planner's, relative to `|r_p + eps|`. A shortfall saturates
/// at -100 %, so `beta = 100` admits every actor action.
pub fn reward_gap(r_r: f64, r_p: f64, eps: f64) -> f64 {
    (100.0 * (r_r - r_p) / (r_p + eps).abs()).max(-100.0)
}

/// Branch to execute and reward to store for a given gap.
pub fn scaffold_select(r_r: f64, r_p: f64, d_f: f64, beta: f64) -> (Branch, f64) {
    if d_f >= -beta {
        (Branch::Actor, r_r)
    } else {
        (Branch::Planner, r_r - (r_p - r_r).abs())
    }
}

/// Estimated outcome of one action under the forward model.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub world: WorldState,
    pub breakdown: RewardBreakdown,
}

impl Prediction {
    pub fn reward(&self) -> f64 {
        self.breakdown.reward()
    }
}

/// One-step forward model: the evader follows `action`, every pursuer keeps
/// its current velocity (no chase switching, no wall bounce). The reward is
/// scored against a copy of `tracker`; neither input is modified.
pub fn predict_next_state(
    w: &WorldState,
    action: Vec2,
    arena: &ArenaConfig,
    tracker: &RewardTracker,
) -> Prediction {
    let mut est = w.clone();
    est.evader = step_evader(&w.evader, action, arena);
    for p in est.pursuers.iter_mut() {
        p.position += p.velocity() * arena.dt;
    }
    est.steps += 1;
    est.t = (est.steps as f64 * arena.dt).min(arena.t_max);
    let detections = detect(&est, arena);
    let d_b = nearest_boundary_distance(est.evader.position, arena);
    let t_f = time_factor(est.t, arena.t_max);
    let mut scratch = tracker.clone();
    let breakdown = scratch.evaluate(&detections, d_b, t_f, arena);
    Prediction {
        world: est,
        breakdown,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub tuple: ExperienceTuple,
    /// Present on scaffolded steps only.
    pub decision: Option<ScaffoldDecision>,
    /// Realized reward breakdown of the executed action.
    pub realized: RewardBreakdown,
    pub outcome: Option<EpisodeOutcome>,
}

fn actor_velocity(a: [f64; 2], arena: &ArenaConfig) -> Vec2 {
    Vec2::new(a[0], a[1]) * arena.v_e_max
}

/// Unscaffolded step: execute the actor's sampled action and store the
/// realized reward.
pub fn actor_step<R: Rng + ?Sized>(
    ep: &mut Episode,
    actor: &Mlp,
    rng: &mut R,
) -> Result<StepRecord, Sr2lError> {
    let s = ep.state().to_vec();
    let a_r = forward_actor(actor, &s, rng)?.action;
    let res = ep.execute(actor_velocity(a_r, &ep.arena))?;
    Ok(StepRecord {
        tuple: ExperienceTuple {
            s,
            action: a_r,
            reward: res.breakdown.reward(),
            s_next: ep.state().to_vec(),
            terminal: res.outcome.is_some(),
            branch: Branch::Actor,
        },
        decision: None,
        realized: res.breakdown,
        outcome: res.outcome,
    })
}

/// Scaffolded step. The actor's action is drawn exactly as in
/// [`actor_step`], so with a permissive threshold the two produce identical
/// transcripts. When the actor's action is executed its reward is known
/// exactly and the realized value is stored in place of the estimate.
pub fn sr2l_step<R: Rng + ?Sized>(
    ep: &mut Episode,
    actor: &Mlp,
    planner: &dyn Planner,
    scaffold: &ScaffoldConfig,
    rng: &mut R,
) -> Result<StepRecord, Sr2lError> {
    if let Some(o) = ep.world.outcome {
        return Err(EnvError::Terminal(o.kind).into());
    }
    let s = ep.state().to_vec();
    let a_r = forward_actor(actor, &s, rng)?.action;
    let v_r = actor_velocity(a_r, &ep.arena);
    let v_p = planner.plan(&ep.world, &ep.obs, &ep.arena);

    let r_r = predict_next_state(&ep.world, v_r, &ep.arena, &ep.tracker).reward();
    let r_p = predict_next_state(&ep.world, v_p, &ep.arena, &ep.tracker).reward();
    let d_f = reward_gap(r_r, r_p, scaffold.epsilon);
    let (executed, selected_reward) = scaffold_select(r_r, r_p, d_f, scaffold.beta);

    let (velocity, executed_action) = match executed {
        Branch::Actor => (v_r, a_r),
        Branch::Planner => (v_p, [v_p.x / ep.arena.v_e_max, v_p.y / ep.arena.v_e_max]),
    };
    let res = ep.execute(velocity)?;
    let stored_reward = match executed {
        Branch::Actor => res.breakdown.reward(),
        Branch::Planner => selected_reward,
    };
    let action = if scaffold.store_executed_action {
        executed_action
    } else {
        a_r
    };
    Ok(StepRecord {
        tuple: ExperienceTuple {
            s,
            action,
            reward: stored_reward,
            s_next: ep.state().to_vec(),
            terminal: res.outcome.is_some(),
            branch: executed,
        },
        decision: Some(ScaffoldDecision {
            r_r,
            r_p,
            d_f,
            executed,
            stored_reward,
        }),
        realized: res.breakdown,
        outcome: res.outcome,
    })
}
