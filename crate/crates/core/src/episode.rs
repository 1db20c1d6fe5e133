//! A running episode: world, per-episode reward state and the latest
//! observation, advanced one velocity command at a time.

use crate::env::{init_world, ArenaConfig, EnvError, EpisodeOutcome, WorldState};
use crate::geom::Vec2;
use crate::rewards::{RewardBreakdown, RewardTracker};
use crate::sensing::{observe, Observation, SensingConfig};

#[derive(Debug, Clone)]
pub struct Episode {
    pub arena: ArenaConfig,
    pub sensing: SensingConfig,
    pub world: WorldState,
    pub tracker: RewardTracker,
    pub obs: Observation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub breakdown: RewardBreakdown,
    pub outcome: Option<EpisodeOutcome>,
}

impl Episode {
    /// Fresh episode seeded from `arena.seed`.
    pub fn new(arena: &ArenaConfig, sensing: &SensingConfig) -> Self {
        Self::from_world(init_world(arena), arena, sensing)
    }

    pub fn from_world(world: WorldState, arena: &ArenaConfig, sensing: &SensingConfig) -> Self {
        let obs = observe(&world, arena, sensing);
        let tracker = RewardTracker::new(&obs.detections, obs.d_b);
        Self {
            arena: arena.clone(),
            sensing: sensing.clone(),
            world,
            tracker,
            obs,
        }
    }

    pub fn is_done(&self) -> bool {
        self.world.is_terminal()
    }

    pub fn state(&self) -> &[f64] {
        &self.obs.state.values
    }

    /// Step the world with a world-frame velocity command, re-observe and
    /// score the transition.
    pub fn execute(&mut self, velocity: Vec2) -> Result<StepResult, EnvError> {
        let outcome = self.world.step(velocity, &self.arena)?;
        self.obs = observe(&self.world, &self.arena, &self.sensing);
        let t_f = self.obs.state.t_f;
        let breakdown = self
            .tracker
            .evaluate(&self.obs.detections, self.obs.d_b, t_f, &self.arena);
        Ok(StepResult { breakdown, outcome })
    }
}
