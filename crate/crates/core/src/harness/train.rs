//! Sequential training loop for the independent and scaffolded learners.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{derive_seed, fmt_f64, HarnessError, Mode, RunConfig, STREAM_TRAIN};
use crate::env::{ArenaConfig, OutcomeKind};
use crate::episode::Episode;
use crate::neural::{
    actor_update, checkpoint, critic_update, soft_update, Branch, NeuralError, PolicyBundle,
    ReplayBuffer,
};
use crate::pfm::PotentialField;
use crate::sr2l::{actor_step, sr2l_step};

pub const TRAIN_LOG_HEADER: &str =
    "episode,outcome,steps,total_reward,mean_reward,planner_fraction";

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub outcome: OutcomeKind,
    pub steps: usize,
    /// Sum of realized rewards of the executed actions.
    pub total_reward: f64,
    pub mean_reward: f64,
    /// Fraction of steps that ran the planner's action; scaffolded mode only.
    pub planner_fraction: Option<f64>,
}

impl EpisodeLog {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.episode,
            self.outcome,
            self.steps,
            fmt_f64(self.total_reward),
            fmt_f64(self.mean_reward),
            self.planner_fraction.map(fmt_f64).unwrap_or_default()
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub bundle: PolicyBundle,
    pub logs: Vec<EpisodeLog>,
    pub updates: usize,
}

/// Arena for training episode `ep` of a run seeded with `seed`.
pub fn episode_arena(arena: &ArenaConfig, seed: u64, ep: usize) -> ArenaConfig {
    ArenaConfig {
        seed: derive_seed(seed, STREAM_TRAIN, ep as u64),
        ..arena.clone()
    }
}

/// Trailing moving average with window `w` (shorter at the start).
pub fn moving_average(xs: &[f64], w: usize) -> Vec<f64> {
    assert!(w > 0);
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for i in 0..xs.len() {
        sum += xs[i];
        if i >= w {
            sum -= xs[i - w];
        }
        out.push(sum / (i + 1).min(w) as f64);
    }
    out
}

/// First episode index (0-based) whose full-window moving average of the
/// per-step mean reward reaches `threshold`.
pub fn episodes_to_threshold(logs: &[EpisodeLog], w: usize, threshold: f64) -> Option<usize> {
    let xs: Vec<f64> = logs.iter().map(|l| l.mean_reward).collect();
    moving_average(&xs, w)
        .iter()
        .enumerate()
        .skip(w.saturating_sub(1))
        .find(|(_, &m)| m >= threshold)
        .map(|(i, _)| i)
}

struct Sinks {
    dir: PathBuf,
    log: BufWriter<File>,
    last_checkpoint: Option<PathBuf>,
}

impl Sinks {
    fn open(dir: &Path, cfg: &RunConfig) -> Result<Self, HarnessError> {
        fs::create_dir_all(dir)?;
        let saved = RunConfig {
            output_dir: None,
            ..cfg.clone()
        };
        fs::write(dir.join("config.toml"), saved.to_toml())?;
        let mut log = BufWriter::new(File::create(dir.join("train_log.csv"))?);
        writeln!(log, "{TRAIN_LOG_HEADER}")?;
        log.flush()?;
        Ok(Self {
            dir: dir.to_path_buf(),
            log,
            last_checkpoint: None,
        })
    }

    fn checkpoint(&mut self, name: &str, bundle: &PolicyBundle) -> Result<(), HarnessError> {
        let path = self.dir.join(name);
        checkpoint::save(bundle, &path)?;
        self.last_checkpoint = Some(path);
        Ok(())
    }
}

/// Train an actor-critic evader. With `cfg.output_dir` set, the per-episode
/// log is appended to `train_log.csv` as episodes finish and checkpoints are
/// written as `checkpoint_<episode>.cepn` plus `final.cepn`.
pub fn train(cfg: &RunConfig) -> Result<TrainOutput, HarnessError> {
    cfg.validate()?;
    if !cfg.mode.is_learning() {
        return Err(HarnessError::Config(format!(
            "mode {:?} has nothing to train",
            cfg.mode
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_TRAIN, u64::MAX));
    let mut bundle = PolicyBundle::new(cfg.sensing.n_s, &cfg.train.hidden, &mut rng);
    let mut buffer = ReplayBuffer::new(cfg.train.buffer_capacity);
    let planner = PotentialField::new(cfg.pfm.clone());
    let mut sinks = match &cfg.output_dir {
        Some(dir) => Some(Sinks::open(dir, cfg)?),
        None => None,
    };
    if let Some(s) = sinks.as_mut() {
        s.checkpoint("checkpoint_0.cepn", &bundle)?;
    }
    let mut logs = Vec::with_capacity(cfg.episodes);
    let mut updates = 0;

    for ep in 0..cfg.episodes {
        let arena = episode_arena(&cfg.arena, cfg.seed, ep);
        let mut episode = Episode::new(&arena, &cfg.sensing);
        let mut total = 0.0;
        let mut planner_steps = 0usize;
        let outcome = loop {
            let rec = match cfg.mode {
                Mode::Sr2l => sr2l_step(
                    &mut episode,
                    &bundle.actor,
                    &planner,
                    &cfg.scaffold,
                    &mut rng,
                )?,
                _ => actor_step(&mut episode, &bundle.actor, &mut rng)?,
            };
            total += rec.realized.reward();
            if rec.tuple.branch == Branch::Planner {
                planner_steps += 1;
            }
            buffer.push(rec.tuple);
            if buffer.len() >= cfg.train.batch_size {
                let step = (|| -> Result<(), NeuralError> {
                    let batch = buffer
                        .sample(cfg.train.batch_size, &mut rng)
                        .expect("buffer holds a batch");
                    critic_update(&batch, &mut bundle, &cfg.train, &mut rng)?;
                    actor_update(&batch, &mut bundle, &cfg.train, &mut rng)?;
                    soft_update(&mut bundle.target_critic, &bundle.critic, cfg.train.tau)
                })();
                if let Err(source) = step {
                    let checkpoint = match sinks.as_mut() {
                        Some(s) => {
                            s.log.flush()?;
                            s.last_checkpoint.clone()
                        }
                        None => None,
                    };
                    return Err(HarnessError::Diverged {
                        episode: ep,
                        checkpoint,
                        source,
                    });
                }
                updates += 1;
            }
            if let Some(o) = rec.outcome {
                break o;
            }
        };
        let log = EpisodeLog {
            episode: ep,
            outcome: outcome.kind,
            steps: outcome.steps,
            total_reward: total,
            mean_reward: total / outcome.steps as f64,
            planner_fraction: (cfg.mode == Mode::Sr2l)
                .then(|| planner_steps as f64 / outcome.steps as f64),
        };
        if let Some(s) = sinks.as_mut() {
            writeln!(s.log, "{}", log.csv_row())?;
            s.log.flush()?;
            if cfg.checkpoint_every > 0 && (ep + 1) % cfg.checkpoint_every == 0 {
                s.checkpoint(&format!("checkpoint_{}.cepn", ep + 1), &bundle)?;
            }
        }
        logs.push(log);
    }
    if let Some(s) = sinks.as_mut() {
        s.checkpoint("final.cepn", &bundle)?;
    }
    Ok(TrainOutput {
        bundle,
        logs,
        updates,
    })
}
