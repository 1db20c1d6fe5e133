//! Escape statistics over a grid of pursuer counts, speed ratios and
//! sensing-range ratios for one fixed policy.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::eval::{evaluate_monte_carlo, Evader};
use super::{fmt_f64, HarnessError};
use crate::env::ArenaConfig;
use crate::sensing::SensingConfig;

/// Grid axes. `v_ratio` is evader top speed over pursuer top speed,
/// `r_ratio` evader sensing range over pursuer sensing range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub n_pursuers: Vec<usize>,
    pub v_ratio: Vec<f64>,
    pub r_ratio: Vec<f64>,
    pub episodes: usize,
    pub seed: u64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            n_pursuers: vec![10, 20, 30, 40, 50],
            v_ratio: vec![1.0, 1.5, 2.0],
            r_ratio: vec![1.0, 1.5, 2.0],
            episodes: 200,
            seed: 0,
        }
    }
}

impl SweepGrid {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let g: SweepGrid = toml::from_str(&std::fs::read_to_string(path)?)?;
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.episodes == 0 {
            return Err(HarnessError::Config("sweep needs episodes >= 1".into()));
        }
        if self
            .v_ratio
            .iter()
            .chain(&self.r_ratio)
            .any(|r| !(*r > 0.0))
        {
            return Err(HarnessError::Config("ratios must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub n_pursuers: usize,
    pub v_ratio: f64,
    pub r_ratio: f64,
    pub escape_pct: f64,
    pub mean_escape_steps: Option<f64>,
}

pub const SWEEP_HEADER: &str = "n_pursuers,v_ratio,r_ratio,escape_pct,mean_escape_steps";

/// Arena for one grid cell: pursuer top speed `v_e_max / v_ratio` (the
/// minimum speed is capped at it), pursuer range `r_e / r_ratio`.
pub fn cell_arena(base: &ArenaConfig, n: usize, v_ratio: f64, r_ratio: f64) -> ArenaConfig {
    let v_p_max = base.v_e_max / v_ratio;
    ArenaConfig {
        n_pursuers: n,
        v_p_max,
        v_p_min: base.v_p_min.min(v_p_max),
        r_p: base.r_e / r_ratio,
        ..base.clone()
    }
}

/// Evaluate `evader` on every cell, in pursuer-count, speed-ratio,
/// range-ratio order. Every cell reuses the same episode seeds.
pub fn sweep(
    evader: Evader<'_>,
    base: &ArenaConfig,
    sensing: &SensingConfig,
    grid: &SweepGrid,
) -> Result<Vec<SweepCell>, HarnessError> {
    grid.validate()?;
    let mut cells = Vec::new();
    for &n in &grid.n_pursuers {
        for &v in &grid.v_ratio {
            for &r in &grid.r_ratio {
                let arena = cell_arena(base, n, v, r);
                let rep = evaluate_monte_carlo(evader, &arena, sensing, grid.episodes, grid.seed)?;
                cells.push(SweepCell {
                    n_pursuers: n,
                    v_ratio: v,
                    r_ratio: r,
                    escape_pct: rep.escape_pct,
                    mean_escape_steps: rep.mean_escape_steps,
                });
            }
        }
    }
    Ok(cells)
}

pub fn write_csv<W: Write>(cells: &[SweepCell], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for c in cells {
        writeln!(
            w,
            "{},{},{},{},{}",
            c.n_pursuers,
            fmt_f64(c.v_ratio),
            fmt_f64(c.r_ratio),
            fmt_f64(c.escape_pct),
            c.mean_escape_steps.map(fmt_f64).unwrap_or_default()
        )?;
    }
    Ok(())
}
