//! Per-step trajectory dump of one deterministic policy rollout.

use std::io::Write;

use super::{fmt_f64, HarnessError};
use crate::env::ArenaConfig;
use crate::episode::Episode;
use crate::geom::Vec2;
use crate::neural::{deterministic_action, Mlp};
use crate::sensing::SensingConfig;

/// Column names for an arena with `n` pursuers.
pub fn header(n: usize) -> String {
    let mut h =
        String::from("step,t,status,evader_x,evader_y,lidar_min,lidar_hits,d_b,r_d,r_b,t_f,r");
    for i in 0..n {
        h.push_str(&format!(",p{i}_x,p{i}_y,p{i}_mode"));
    }
    h
}

fn row(ep: &Episode, status: &str, parts: Option<(f64, f64, f64, f64)>) -> String {
    let w = &ep.world;
    let ranges = &ep.obs.lidar.ranges;
    let lidar_min = ranges.iter().copied().fold(f64::INFINITY, f64::min);
    let hits = ranges.iter().filter(|&&r| r < ep.arena.r_e).count();
    let (r_d, r_b, t_f, r) = match parts {
        Some((a, b, c, d)) => (fmt_f64(a), fmt_f64(b), fmt_f64(c), fmt_f64(d)),
        None => Default::default(),
    };
    let mut s = format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        w.steps,
        fmt_f64(w.t),
        status,
        fmt_f64(w.evader.position.x),
        fmt_f64(w.evader.position.y),
        fmt_f64(lidar_min),
        hits,
        fmt_f64(ep.obs.d_b),
        r_d,
        r_b,
        t_f,
        r
    );
    for p in &w.pursuers {
        s.push_str(&format!(
            ",{},{},{:?}",
            fmt_f64(p.position.x),
            fmt_f64(p.position.y),
            p.mode
        ));
    }
    s
}

/// Roll out the noise-free policy in the world seeded by `arena.seed` and
/// write one row per state, starting with the initial state. The last row's
/// status is the outcome.
pub fn replay<W: Write>(
    actor: &Mlp,
    arena: &ArenaConfig,
    sensing: &SensingConfig,
    mut out: W,
) -> Result<usize, HarnessError> {
    arena.validate()?;
    let mut ep = Episode::new(arena, sensing);
    writeln!(out, "{}", header(arena.n_pursuers))?;
    writeln!(out, "{}", row(&ep, "Running", None))?;
    let mut rows = 1;
    loop {
        let a = deterministic_action(actor, ep.state())?;
        let res = ep.execute(Vec2::new(a[0], a[1]) * arena.v_e_max)?;
        let b = &res.breakdown;
        let status = res
            .outcome
            .map(|o| o.kind.to_string())
            .unwrap_or_else(|| "Running".into());
        writeln!(
            out,
            "{}",
            row(&ep, &status, Some((b.r_d, b.r_b, b.t_f, b.r)))
        )?;
        rows += 1;
        if res.outcome.is_some() {
            return Ok(rows);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_and_terminated() {
        let arena = ArenaConfig {
            seed: 11,
            ..ArenaConfig::desk()
        };
        let sensing = SensingConfig::desk();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let actor = Mlp::random(&[sensing.n_s, 8, 4], &mut rng);
        let mut a = Vec::new();
        let mut b = Vec::new();
        let rows = replay(&actor, &arena, &sensing, &mut a).unwrap();
        replay(&actor, &arena, &sensing, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), rows + 1);
        assert!(rows <= arena.max_steps() + 1);
        let status = lines.last().unwrap().split(',').nth(2).unwrap();
        assert!(["Escaped", "Captured", "Timeout"].contains(&status));
        let cols = lines[0].split(',').count();
        assert!(lines.iter().all(|l| l.split(',').count() == cols));
    }
}
