use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::env::ArenaConfig;
use crate::neural::TrainConfig;
use crate::pfm::PfmGains;
use crate::sensing::SensingConfig;
use crate::sr2l::ScaffoldConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Iac,
    Sr2l,
    PfmOnly,
    RandomWalk,
}

impl Mode {
    pub fn is_learning(self) -> bool {
        matches!(self, Mode::Iac | Mode::Sr2l)
    }
}

/// Everything a run needs. Serialized as TOML; every table is optional and
/// falls back to the desk profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub arena: ArenaConfig,
    pub sensing: SensingConfig,
    pub train: TrainConfig,
    pub scaffold: ScaffoldConfig,
    pub pfm: PfmGains,
    pub mode: Mode,
    pub episodes: usize,
    pub eval_episodes: usize,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Save a checkpoint every this many episodes (0 disables).
    pub checkpoint_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl RunConfig {
    pub fn desk() -> Self {
        Self {
            arena: ArenaConfig::desk(),
            sensing: SensingConfig::desk(),
            train: TrainConfig::default(),
            scaffold: ScaffoldConfig::default(),
            pfm: PfmGains::default(),
            mode: Mode::Sr2l,
            episodes: 300,
            eval_episodes: 200,
            seed: 0,
            output_dir: None,
            checkpoint_every: 50,
        }
    }

    pub fn full() -> Self {
        Self {
            arena: ArenaConfig::full(),
            sensing: SensingConfig::full(),
            episodes: 2000,
            eval_episodes: 1000,
            ..Self::desk()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.arena.validate()?;
        let bad = HarnessError::Config;
        self.sensing.validate().map_err(bad)?;
        self.train.validate().map_err(bad)?;
        self.scaffold.validate().map_err(bad)?;
        self.pfm.validate().map_err(bad)?;
        if self.episodes == 0 {
            return Err(bad("episodes must be >= 1".into()));
        }
        if self.eval_episodes == 0 {
            return Err(bad("eval_episodes must be >= 1".into()));
        }
        Ok(())
    }
}
