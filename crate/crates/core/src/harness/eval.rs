//! Monte-Carlo evaluation of trained policies and hand-written evaders.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{derive_seed, fmt_f64, HarnessError, STREAM_EVADER, STREAM_EVAL};
use crate::env::{ArenaConfig, OutcomeKind};
use crate::episode::Episode;
use crate::geom::Vec2;
use crate::neural::{deterministic_action, Mlp};
use crate::pfm::{PfmGains, Planner, PotentialField};
use crate::sensing::SensingConfig;

/// Evader controller under evaluation.
#[derive(Debug, Clone, Copy)]
pub enum Evader<'a> {
    /// Noise-free actor: the squashed mean action.
    Policy(&'a Mlp),
    Pfm(&'a PfmGains),
    /// Full speed in a fresh uniformly random direction every step.
    RandomWalk,
}

impl Evader<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Evader::Policy(_) => "policy",
            Evader::Pfm(_) => "pfm",
            Evader::RandomWalk => "random-walk",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalEpisode {
    pub episode: usize,
    pub outcome: OutcomeKind,
    pub steps: usize,
    pub total_reward: f64,
    pub mean_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    pub first_episode: usize,
    pub escape_pct: f64,
    pub mean_reward: f64,
    pub mean_escape_steps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub episodes: Vec<EvalEpisode>,
    pub escape_pct: f64,
    /// Mean steps over escaped episodes; `None` when nothing escaped.
    pub mean_escape_steps: Option<f64>,
    /// Mean over episodes of the per-step mean reward.
    pub mean_reward: f64,
    /// The same aggregates over consecutive blocks of 100 episodes.
    pub buckets: Vec<Bucket>,
}

pub const EVAL_HEADER: &str = "episode,outcome,steps,total_reward,mean_reward";

fn summarize(eps: &[EvalEpisode]) -> (f64, Option<f64>, f64) {
    let n = eps.len() as f64;
    let escaped: Vec<usize> = eps
        .iter()
        .filter(|e| e.outcome == OutcomeKind::Escaped)
        .map(|e| e.steps)
        .collect();
    let escape_pct = 100.0 * escaped.len() as f64 / n;
    let mean_steps =
        (!escaped.is_empty()).then(|| escaped.iter().sum::<usize>() as f64 / escaped.len() as f64);
    let mean_reward = eps.iter().map(|e| e.mean_reward).sum::<f64>() / n;
    (escape_pct, mean_steps, mean_reward)
}

impl EvalReport {
    pub fn from_episodes(episodes: Vec<EvalEpisode>) -> Self {
        assert!(!episodes.is_empty());
        let (escape_pct, mean_escape_steps, mean_reward) = summarize(&episodes);
        let buckets = episodes
            .chunks(100)
            .enumerate()
            .map(|(i, c)| {
                let (escape_pct, mean_escape_steps, mean_reward) = summarize(c);
                Bucket {
                    first_episode: i * 100,
                    escape_pct,
                    mean_reward,
                    mean_escape_steps,
                }
            })
            .collect();
        Self {
            episodes,
            escape_pct,
            mean_escape_steps,
            mean_reward,
            buckets,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{EVAL_HEADER}")?;
        for e in &self.episodes {
            writeln!(
                w,
                "{},{},{},{},{}",
                e.episode,
                e.outcome,
                e.steps,
                fmt_f64(e.total_reward),
                fmt_f64(e.mean_reward)
            )?;
        }
        Ok(())
    }

    pub fn write_buckets_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "first_episode,escape_pct,mean_escape_steps,mean_reward")?;
        for b in &self.buckets {
            writeln!(
                w,
                "{},{},{},{}",
                b.first_episode,
                fmt_f64(b.escape_pct),
                b.mean_escape_steps.map(fmt_f64).unwrap_or_default(),
                fmt_f64(b.mean_reward)
            )?;
        }
        Ok(())
    }
}

/// Arena for evaluation episode `i` under `seed`.
pub fn eval_arena(arena: &ArenaConfig, seed: u64, i: usize) -> ArenaConfig {
    ArenaConfig {
        seed: derive_seed(seed, STREAM_EVAL, i as u64),
        ..arena.clone()
    }
}

/// Run one evaluation episode to completion.
pub fn run_episode(
    evader: Evader<'_>,
    arena: &ArenaConfig,
    sensing: &SensingConfig,
    episode: usize,
) -> Result<EvalEpisode, HarnessError> {
    let mut ep = Episode::new(arena, sensing);
    let planner = match evader {
        Evader::Pfm(g) => Some(PotentialField::new(g.clone())),
        _ => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(arena.seed, STREAM_EVADER, 0));
    let mut total = 0.0;
    loop {
        let v = match evader {
            Evader::Policy(actor) => {
                let a = deterministic_action(actor, ep.state())?;
                Vec2::new(a[0], a[1]) * arena.v_e_max
            }
            Evader::Pfm(_) => planner.as_ref().unwrap().plan(&ep.world, &ep.obs, arena),
            Evader::RandomWalk => {
                let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                Vec2::from_angle(theta) * arena.v_e_max
            }
        };
        let res = ep.execute(v)?;
        total += res.breakdown.reward();
        if let Some(o) = res.outcome {
            return Ok(EvalEpisode {
                episode,
                outcome: o.kind,
                steps: o.steps,
                total_reward: total,
                mean_reward: total / o.steps as f64,
            });
        }
    }
}

/// Evaluate `evader` over `episodes` independent episodes, in parallel.
/// Episode `i` is seeded from `(seed, i)` alone, and results are kept in
/// episode order, so the report does not depend on thread scheduling.
pub fn evaluate_monte_carlo(
    evader: Evader<'_>,
    arena: &ArenaConfig,
    sensing: &SensingConfig,
    episodes: usize,
    seed: u64,
) -> Result<EvalReport, HarnessError> {
    if episodes == 0 {
        return Err(HarnessError::Config("need at least one episode".into()));
    }
    arena.validate()?;
    let eps = (0..episodes)
        .into_par_iter()
        .map(|i| run_episode(evader, &eval_arena(arena, seed, i), sensing, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::from_episodes(eps))
}
