//! Actor and critic networks, entropy-regularized actor-critic updates,
//! replay storage and checkpoint I/O.

pub mod checkpoint;
pub mod mlp;
pub mod policy;
pub mod replay;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mlp::{ForwardCache, Mlp};
pub use policy::{
    actor_update, critic_target, critic_update, deterministic_action, forward_actor,
    forward_critic, soft_update, ActorOutput, PolicyBundle,
};
pub use replay::{Branch, ExperienceTuple, ReplayBuffer};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{which} update diverged (loss = {loss})")]
    Divergence { which: &'static str, loss: f64 },
    #[error("corrupt checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gamma: f64,
    /// Entropy temperature.
    pub alpha: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Global gradient-norm ceiling applied before every SGD step.
    pub grad_clip: f64,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            alpha: 0.2,
            lr_actor: 1e-3,
            lr_critic: 1e-3,
            tau: 0.005,
            batch_size: 64,
            buffer_capacity: 100_000,
            grad_clip: 1.0,
            hidden: vec![64, 64],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err("gamma must lie in (0, 1]".into());
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err("tau must lie in (0, 1]".into());
        }
        if !(self.alpha >= 0.0
            && self.lr_actor > 0.0
            && self.lr_critic > 0.0
            && self.grad_clip > 0.0)
        {
            return Err("alpha must be >= 0 and learning rates and grad_clip > 0".into());
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return Err("need 0 < batch_size <= buffer_capacity".into());
        }
        if self.hidden.contains(&0) {
            return Err("hidden widths must be positive".into());
        }
        Ok(())
    }
}
