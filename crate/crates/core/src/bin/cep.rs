use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use cep::env::ArenaConfig;
use cep::harness::{self, eval, sweep, Evader, Mode, RunConfig, SweepGrid};
use cep::neural::checkpoint;

#[derive(Parser)]
#[command(
    name = "cep",
    version,
    about = "Confinement-escape simulator and trainer"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train an evader policy.
    Train {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Run config (TOML). Desk profile when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Override the episode count.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Monte-Carlo evaluation of a checkpoint, optionally against the
    /// planner and random-walk baselines.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        episodes: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for per-episode CSVs.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        baselines: bool,
    },
    /// Escape statistics over a grid of pursuer counts and ratios.
    Sweep {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Grid file (TOML). Default grid when omitted.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-step trajectory CSV of one noise-free rollout.
    Replay {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(RunConfig::desk()),
    }
}

fn open_out(path: Option<&PathBuf>) -> Result<Box<dyn std::io::Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn print_report(name: &str, r: &eval::EvalReport) {
    println!(
        "{name}: escape {:.1}%  mean escape steps {}  mean reward {:.4}",
        r.escape_pct,
        r.mean_escape_steps
            .map(|s| format!("{s:.1}"))
            .unwrap_or_else(|| "-".into()),
        r.mean_reward
    );
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Train {
            mode,
            config,
            seed,
            out,
            episodes,
        } => {
            let mut cfg = load_config(config.as_ref())?;
            cfg.mode = mode;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = episodes {
                cfg.episodes = n;
            }
            cfg.output_dir = Some(out.clone());
            if !mode.is_learning() {
                bail!("train needs --mode iac or sr2l");
            }
            let res = harness::train(&cfg)?;
            let last: Vec<f64> = res
                .logs
                .iter()
                .rev()
                .take(20)
                .map(|l| l.mean_reward)
                .collect();
            println!(
                "trained {} episodes, {} updates; last-20 mean reward {:.4}; output in {}",
                res.logs.len(),
                res.updates,
                last.iter().sum::<f64>() / last.len() as f64,
                out.display()
            );
        }
        Cmd::Eval {
            checkpoint: ckpt,
            episodes,
            config,
            seed,
            out,
            baselines,
        } => {
            let cfg = load_config(config.as_ref())?;
            let bundle = checkpoint::load(&ckpt)?;
            let mut runs = vec![Evader::Policy(&bundle.actor)];
            if baselines {
                runs.push(Evader::Pfm(&cfg.pfm));
                runs.push(Evader::RandomWalk);
            }
            if let Some(dir) = &out {
                fs::create_dir_all(dir)?;
            }
            for ev in runs {
                let rep =
                    harness::evaluate_monte_carlo(ev, &cfg.arena, &cfg.sensing, episodes, seed)?;
                print_report(ev.name(), &rep);
                if let Some(dir) = &out {
                    rep.write_csv(BufWriter::new(File::create(
                        dir.join(format!("eval_{}.csv", ev.name())),
                    )?))?;
                    rep.write_buckets_csv(BufWriter::new(File::create(
                        dir.join(format!("eval_{}_per100.csv", ev.name())),
                    )?))?;
                }
            }
        }
        Cmd::Sweep {
            checkpoint: ckpt,
            grid,
            config,
            out,
        } => {
            let cfg = load_config(config.as_ref())?;
            let grid = match grid {
                Some(p) => SweepGrid::load(&p)?,
                None => SweepGrid::default(),
            };
            let bundle = checkpoint::load(&ckpt)?;
            let cells = harness::sweep(
                Evader::Policy(&bundle.actor),
                &cfg.arena,
                &cfg.sensing,
                &grid,
            )?;
            sweep::write_csv(&cells, open_out(out.as_ref())?)?;
        }
        Cmd::Replay {
            checkpoint: ckpt,
            seed,
            config,
            out,
        } => {
            let cfg = load_config(config.as_ref())?;
            let bundle = checkpoint::load(&ckpt)?;
            let arena = ArenaConfig {
                seed,
                ..cfg.arena.clone()
            };
            harness::replay(&bundle.actor, &arena, &cfg.sensing, open_out(out.as_ref())?)?;
        }
    }
    Ok(())
}
