//! Arena geometry, agent kinematics and the episode lifecycle.
//!
//! The arena is the axis-aligned rectangle `[-half_width, half_width] x
//! [-half_height, half_height]`. The evader spawns in the centred square of
//! half-side `spawn_half_extent` and pursuers spawn anywhere else inside the
//! arena. Pursuers patrol in straight lines, bounce specularly off walls, and
//! switch to a full-speed chase while the evader is inside their sensor range.
//!
//! A step moves the evader first, then every pursuer in list order (pursuers
//! see the evader's new position), then advances the clock and checks for
//! termination.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

use crate::geom::Vec2;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("invalid arena config: {0}")]
    InvalidConfig(String),
    #[error("world already terminated with {0}; reset before stepping")]
    Terminal(OutcomeKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArenaConfig {
    pub half_width: f64,
    pub half_height: f64,
    pub spawn_half_extent: f64,
    pub n_pursuers: usize,
    pub v_e_max: f64,
    pub v_p_min: f64,
    pub v_p_max: f64,
    pub r_e: f64,
    pub r_p: f64,
    pub capture_radius: f64,
    pub dt: f64,
    pub t_max: f64,
    pub seed: u64,
}

impl ArenaConfig {
    /// 200 m x 200 m arena with 30 pursuers and a 300 s horizon.
    pub fn full() -> Self {
        Self {
            half_width: 100.0,
            half_height: 100.0,
            spawn_half_extent: 10.0,
            n_pursuers: 30,
            v_e_max: 15.0,
            v_p_min: 5.0,
            v_p_max: 10.0,
            r_e: 15.0,
            r_p: 10.0,
            capture_radius: 2.0,
            dt: 0.1,
            t_max: 300.0,
            seed: 0,
        }
    }

    /// 100 m x 100 m arena with 10 pursuers and a 100 s horizon.
    pub fn desk() -> Self {
        Self {
            half_width: 50.0,
            half_height: 50.0,
            n_pursuers: 10,
            t_max: 100.0,
            ..Self::full()
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |msg: &str| Err(EnvError::InvalidConfig(msg.to_string()));
        let lengths = [
            self.half_width,
            self.half_height,
            self.spawn_half_extent,
            self.r_e,
            self.r_p,
            self.capture_radius,
        ];
        if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return bad("all lengths must be finite and > 0");
        }
        if !(self.v_e_max > 0.0 && self.v_p_min >= 0.0 && self.v_p_min <= self.v_p_max) {
            return bad("speeds must satisfy v_e_max > 0 and 0 <= v_p_min <= v_p_max");
        }
        if self.spawn_half_extent >= self.half_width.min(self.half_height) {
            return bad("spawn region must lie strictly inside the arena");
        }
        if self.capture_radius >= self.r_p {
            return bad("capture_radius must be smaller than r_p");
        }
        if !(self.dt > 0.0 && self.t_max > self.dt) {
            return bad("need dt > 0 and t_max > dt");
        }
        Ok(())
    }

    /// Number of steps after which an episode times out.
    pub fn max_steps(&self) -> usize {
        ((self.t_max / self.dt) - 1e-9).ceil() as usize
    }

    #[inline]
    pub fn contains(&self, p: Vec2) -> bool {
        p.x.abs() <= self.half_width && p.y.abs() <= self.half_height
    }

    #[inline]
    fn in_spawn(&self, p: Vec2) -> bool {
        p.x.abs() <= self.spawn_half_extent && p.y.abs() <= self.spawn_half_extent
    }
}

impl Default for ArenaConfig {
    fn default() -> Self {
        Self::desk()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PursuerMode {
    Patrol,
    Chase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PursuerState {
    pub position: Vec2,
    pub speed: f64,
    /// Speed drawn at spawn; restored whenever the pursuer loses the evader.
    pub patrol_speed: f64,
    pub heading: f64,
    pub mode: PursuerMode,
}

impl PursuerState {
    pub fn patrolling(position: Vec2, speed: f64, heading: f64) -> Self {
        Self {
            position,
            speed,
            patrol_speed: speed,
            heading,
            mode: PursuerMode::Patrol,
        }
    }

    #[inline]
    pub fn velocity(&self) -> Vec2 {
        Vec2::from_angle(self.heading) * self.speed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaderState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeKind {
    Escaped,
    Captured,
    Timeout,
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OutcomeKind::Escaped => "Escaped",
            OutcomeKind::Captured => "Captured",
            OutcomeKind::Timeout => "Timeout",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    pub kind: OutcomeKind,
    pub steps: usize,
    pub final_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub evader: EvaderState,
    pub pursuers: Vec<PursuerState>,
    pub t: f64,
    pub steps: usize,
    pub outcome: Option<EpisodeOutcome>,
    pub rng: ChaCha8Rng,
}

/// Random initial world: evader at rest somewhere in the spawn square,
/// pursuers anywhere in the arena outside it.
pub fn init_world(cfg: &ArenaConfig) -> WorldState {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let s = cfg.spawn_half_extent;
    let evader = EvaderState {
        position: Vec2::new(rng.random_range(-s..=s), rng.random_range(-s..=s)),
        velocity: Vec2::ZERO,
        heading: rng.random_range(-PI..PI),
    };
    let pursuers = (0..cfg.n_pursuers)
        .map(|_| {
            let position = loop {
                let p = Vec2::new(
                    rng.random_range(-cfg.half_width..=cfg.half_width),
                    rng.random_range(-cfg.half_height..=cfg.half_height),
                );
                if !cfg.in_spawn(p) {
                    break p;
                }
            };
            let speed = if cfg.v_p_max > cfg.v_p_min {
                rng.random_range(cfg.v_p_min..=cfg.v_p_max)
            } else {
                cfg.v_p_min
            };
            let heading = rng.random_range(-PI..PI);
            PursuerState::patrolling(position, speed, heading)
        })
        .collect();
    WorldState {
        evader,
        pursuers,
        t: 0.0,
        steps: 0,
        outcome: None,
        rng,
    }
}

/// Apply a commanded velocity for one time step. The command is norm-clipped
/// to `v_e_max`; a zero command keeps the previous heading.
pub fn step_evader(s: &EvaderState, action: Vec2, cfg: &ArenaConfig) -> EvaderState {
    let velocity = action.clamp_norm(cfg.v_e_max);
    let heading = if velocity == Vec2::ZERO {
        s.heading
    } else {
        velocity.angle()
    };
    EvaderState {
        position: s.position + velocity * cfg.dt,
        velocity,
        heading,
    }
}

/// Straight-line motion for one step, reflecting off any wall the step would cross.
fn integrate_reflecting(p: &mut PursuerState, cfg: &ArenaConfig) {
    let mut v = p.velocity();
    let candidate = p.position + v * cfg.dt;
    if cfg.contains(candidate) {
        p.position = candidate;
        return;
    }
    if candidate.x.abs() > cfg.half_width {
        v.x = -v.x;
    }
    if candidate.y.abs() > cfg.half_height {
        v.y = -v.y;
    }
    p.heading = v.angle();
    let next = p.position + v * cfg.dt;
    p.position = Vec2::new(
        next.x.clamp(-cfg.half_width, cfg.half_width),
        next.y.clamp(-cfg.half_height, cfg.half_height),
    );
}

pub fn step_pursuer(p: &PursuerState, evader_pos: Vec2, cfg: &ArenaConfig) -> PursuerState {
    let mut next = *p;
    let to_evader = evader_pos - p.position;
    if to_evader.norm() <= cfg.r_p {
        next.mode = PursuerMode::Chase;
        next.heading = to_evader.angle();
        next.speed = cfg.v_p_max;
    } else {
        next.mode = PursuerMode::Patrol;
        next.speed = p.patrol_speed;
    }
    integrate_reflecting(&mut next, cfg);
    next
}

impl WorldState {
    pub fn is_terminal(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn min_pursuer_distance(&self) -> f64 {
        self.pursuers
            .iter()
            .map(|p| p.position.distance(self.evader.position))
            .fold(f64::INFINITY, f64::min)
    }

    /// Advance one step. Capture takes precedence over escape when both
    /// hold on the same step.
    pub fn step(
        &mut self,
        evader_action: Vec2,
        cfg: &ArenaConfig,
    ) -> Result<Option<EpisodeOutcome>, EnvError> {
        if let Some(o) = self.outcome {
            return Err(EnvError::Terminal(o.kind));
        }
        self.evader = step_evader(&self.evader, evader_action, cfg);
        let e = self.evader.position;
        for p in self.pursuers.iter_mut() {
            *p = step_pursuer(p, e, cfg);
        }
        self.steps += 1;
        self.t = (self.steps as f64 * cfg.dt).min(cfg.t_max);

        let kind = if self.min_pursuer_distance() <= cfg.capture_radius {
            Some(OutcomeKind::Captured)
        } else if !cfg.contains(e) {
            Some(OutcomeKind::Escaped)
        } else if self.steps >= cfg.max_steps() {
            self.t = cfg.t_max;
            Some(OutcomeKind::Timeout)
        } else {
            None
        };
        self.outcome = kind.map(|kind| EpisodeOutcome {
            kind,
            steps: self.steps,
            final_t: self.t,
        });
        Ok(self.outcome)
    }
}

/// Instantaneous objective value for the evader: the normalized proximity of
/// the detected pursuers plus the normalized distance to the nearest wall.
/// Lower is better. An empty detection list contributes nothing.
pub fn objective_value(detected_distances: &[f64], d_b: f64, r_e: f64, r_b: f64) -> f64 {
    let m = detected_distances.len();
    let pursuit = if m == 0 {
        0.0
    } else {
        detected_distances
            .iter()
            .map(|d| (r_e - d) / (m as f64 * r_e))
            .sum()
    };
    pursuit + d_b / r_b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ArenaConfig {
        ArenaConfig::full()
    }

    #[test]
    fn same_seed_gives_identical_worlds() {
        let c = ArenaConfig { seed: 42, ..cfg() };
        assert_eq!(init_world(&c), init_world(&c));
        let other = ArenaConfig { seed: 43, ..cfg() };
        assert_ne!(init_world(&c).evader, init_world(&other).evader);
    }

    #[test]
    fn spawn_regions_respected() {
        for seed in 0..200 {
            let c = ArenaConfig { seed, ..cfg() };
            let w = init_world(&c);
            assert_eq!(w.evader.velocity, Vec2::ZERO);
            assert!(c.in_spawn(w.evader.position));
            assert_eq!(w.pursuers.len(), c.n_pursuers);
            for p in &w.pursuers {
                assert!(!c.in_spawn(p.position));
                assert!(c.contains(p.position));
                assert!(p.speed >= c.v_p_min && p.speed <= c.v_p_max);
            }
        }
    }

    #[test]
    fn evader_kinematics() {
        let c = cfg();
        let s = EvaderState {
            position: Vec2::ZERO,
            velocity: Vec2::ZERO,
            heading: 0.3,
        };
        let n = step_evader(&s, Vec2::new(15.0, 0.0), &c);
        assert_eq!(n.position, Vec2::new(1.5, 0.0));
        let n = step_evader(&s, Vec2::new(30.0, 0.0), &c);
        assert_eq!(n.velocity, Vec2::new(15.0, 0.0));
        let n = step_evader(&s, Vec2::ZERO, &c);
        assert_eq!(n.position, s.position);
        assert_eq!(n.heading, 0.3);
    }

    #[test]
    fn pursuer_bounces_off_vertical_wall() {
        let c = cfg();
        let p = PursuerState::patrolling(Vec2::new(99.8, 0.0), 5.0, 30f64.to_radians());
        let n = step_pursuer(&p, Vec2::new(-50.0, -50.0), &c);
        assert!((n.heading - 150f64.to_radians()).abs() < 1e-12);
        assert_eq!(n.speed, 5.0);
        assert!(c.contains(n.position));
    }

    #[test]
    fn pursuer_corner_reflects_both_components() {
        let c = cfg();
        let p = PursuerState::patrolling(Vec2::new(99.9, 99.9), 10.0, 45f64.to_radians());
        let n = step_pursuer(&p, Vec2::new(-50.0, -50.0), &c);
        assert!((n.heading - (-135f64).to_radians()).abs() < 1e-12);
        assert!(c.contains(n.position));
        assert!((n.velocity().norm() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn pursuer_chase_switch_at_sensor_range() {
        let c = cfg();
        let eps = 1e-6;
        let p = PursuerState::patrolling(Vec2::ZERO, 5.0, 0.0);
        let target = Vec2::new(0.0, c.r_p - eps);
        let n = step_pursuer(&p, target, &c);
        assert_eq!(n.mode, PursuerMode::Chase);
        assert_eq!(n.speed, c.v_p_max);
        assert!((n.heading - PI / 2.0).abs() < 1e-12);

        let n = step_pursuer(&p, Vec2::new(0.0, c.r_p + eps), &c);
        assert_eq!(n.mode, PursuerMode::Patrol);
        assert!((n.position.x - 0.5).abs() < 1e-12);
        assert_eq!(n.position.y, 0.0);
    }

    #[test]
    fn lost_contact_restores_patrol_speed() {
        let c = cfg();
        let mut p = PursuerState::patrolling(Vec2::ZERO, 6.0, 0.0);
        p = step_pursuer(&p, Vec2::new(5.0, 0.0), &c);
        assert_eq!(p.speed, c.v_p_max);
        let heading = p.heading;
        p = step_pursuer(&p, Vec2::new(80.0, 80.0), &c);
        assert_eq!(p.mode, PursuerMode::Patrol);
        assert_eq!(p.speed, 6.0);
        assert_eq!(p.heading, heading);
    }

    fn quiet_world() -> WorldState {
        WorldState {
            evader: EvaderState {
                position: Vec2::ZERO,
                velocity: Vec2::ZERO,
                heading: 0.0,
            },
            pursuers: vec![PursuerState::patrolling(Vec2::new(-90.0, -90.0), 5.0, PI)],
            t: 0.0,
            steps: 0,
            outcome: None,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    #[test]
    fn escape_detected() {
        let c = cfg();
        let mut w = quiet_world();
        w.evader.position = Vec2::new(99.9, 0.0);
        let o = w.step(Vec2::new(15.0, 0.0), &c).unwrap().unwrap();
        assert_eq!(o.kind, OutcomeKind::Escaped);
        assert!(!c.contains(w.evader.position));
    }

    #[test]
    fn capture_detected() {
        let c = cfg();
        let mut w = quiet_world();
        w.pursuers = vec![PursuerState::patrolling(Vec2::new(1.9, 0.0), 0.0, 0.0)];
        let o = w.step(Vec2::ZERO, &c).unwrap().unwrap();
        assert_eq!(o.kind, OutcomeKind::Captured);
    }

    #[test]
    fn timeout_on_last_step() {
        let c = cfg();
        let mut w = quiet_world();
        w.steps = c.max_steps() - 1;
        w.t = c.t_max - c.dt;
        let o = w.step(Vec2::ZERO, &c).unwrap().unwrap();
        assert_eq!(o.kind, OutcomeKind::Timeout);
        assert_eq!(o.final_t, c.t_max);
        assert_eq!(
            w.step(Vec2::ZERO, &c),
            Err(EnvError::Terminal(OutcomeKind::Timeout))
        );
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!(ArenaConfig::desk().validate().is_ok());
        let bad = ArenaConfig {
            capture_radius: 20.0,
            ..cfg()
        };
        assert!(bad.validate().is_err());
        let bad = ArenaConfig {
            v_p_min: 11.0,
            ..cfg()
        };
        assert!(bad.validate().is_err());
        let bad = ArenaConfig {
            spawn_half_extent: 100.0,
            ..cfg()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn objective_examples() {
        assert_eq!(objective_value(&[], 200.0, 15.0, 200.0), 1.0);
        assert_eq!(objective_value(&[], 0.0, 15.0, 200.0), 0.0);
        assert_eq!(objective_value(&[15.0], 100.0, 15.0, 200.0), 0.5);
    }
}
