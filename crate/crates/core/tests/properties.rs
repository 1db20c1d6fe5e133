use std::f64::consts::TAU;

use proptest::prelude::*;

use cep::env::{init_world, step_evader, step_pursuer, ArenaConfig, PursuerMode, PursuerState};
use cep::geom::Vec2;
use cep::neural::Branch;
use cep::pfm::{net_force, pfm_action, PfmGains};
use cep::rewards::{compose_reward, reward_pursuers, DetectionHistory};
use cep::sensing::{
    boundary_scan, cast_rays, nearest_boundary_distance, observe, Detection, SensingConfig,
};
use cep::sr2l::{reward_gap, scaffold_select};

fn desk_with(seed: u64, n: usize) -> ArenaConfig {
    ArenaConfig {
        seed,
        n_pursuers: n,
        ..ArenaConfig::desk()
    }
}

fn world_with_pursuers(evader: Vec2, pursuers: &[Vec2]) -> (cep::env::WorldState, ArenaConfig) {
    let arena = desk_with(0, pursuers.len());
    let mut w = init_world(&arena);
    w.evader.position = evader;
    w.pursuers = pursuers
        .iter()
        .map(|&p| PursuerState::patrolling(p, 5.0, 0.0))
        .collect();
    (w, arena)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn episodes_terminate_once_with_pursuers_contained(
        seed in 0u64..10_000,
        n in 0usize..12,
        actions in prop::collection::vec((-20.0f64..20.0, -20.0f64..20.0), 1..40),
    ) {
        let arena = desk_with(seed, n);
        let mut w = init_world(&arena);
        let patrol: Vec<f64> = w.pursuers.iter().map(|p| p.patrol_speed).collect();
        let mut k = 0;
        let outcome = loop {
            let (ax, ay) = actions[k % actions.len()];
            k += 1;
            let res = w.step(Vec2::new(ax, ay), &arena).unwrap();
            prop_assert!(w.evader.velocity.norm() <= arena.v_e_max * (1.0 + 1e-12));
            for (p, v0) in w.pursuers.iter().zip(&patrol) {
                prop_assert!(p.position.x.abs() <= arena.half_width);
                prop_assert!(p.position.y.abs() <= arena.half_height);
                match p.mode {
                    PursuerMode::Patrol => prop_assert_eq!(p.speed, *v0),
                    PursuerMode::Chase => prop_assert_eq!(p.speed, arena.v_p_max),
                }
            }
            if let Some(o) = res {
                break o;
            }
        };
        prop_assert!(outcome.steps <= arena.max_steps());
        prop_assert!(w.step(Vec2::ZERO, &arena).is_err());
    }

    #[test]
    fn reflection_preserves_speed(
        x in -50.0f64..50.0,
        y in -50.0f64..50.0,
        heading in -std::f64::consts::PI..std::f64::consts::PI,
        speed in 5.0f64..10.0,
    ) {
        let arena = ArenaConfig::desk();
        let p = PursuerState::patrolling(Vec2::new(x, y), speed, heading);
        let far = Vec2::new(1e6, 1e6);
        let next = step_pursuer(&p, far, &arena);
        prop_assert!((next.velocity().norm() - speed).abs() < 1e-9);
        prop_assert!(arena.contains(next.position));
    }

    #[test]
    fn evader_speed_is_clipped(vx in -1e3f64..1e3, vy in -1e3f64..1e3) {
        let arena = ArenaConfig::desk();
        let w = init_world(&arena);
        let e = step_evader(&w.evader, Vec2::new(vx, vy), &arena);
        prop_assert!(e.velocity.norm() <= arena.v_e_max * (1.0 + 1e-12));
    }

    #[test]
    fn state_vector_bounds(seed in 0u64..5000, steps in 0usize..30) {
        let arena = desk_with(seed, 10);
        let sensing = SensingConfig::desk();
        let mut w = init_world(&arena);
        for _ in 0..steps {
            if w.step(Vec2::new(3.0, -2.0), &arena).unwrap().is_some() {
                break;
            }
        }
        let obs = observe(&w, &arena, &sensing);
        for v in &obs.state.values {
            prop_assert!(*v >= 0.0 && *v <= sensing.k_s / 2.0 + 1e-12, "{}", v);
        }
    }

    #[test]
    fn lidar_never_lengthens_as_pursuer_approaches(
        k in 0usize..36,
        d in 3.0f64..15.0,
        shrink in 0.1f64..2.5,
    ) {
        let sensing = SensingConfig::desk();
        let dir = Vec2::from_angle(TAU * k as f64 / 36.0);
        let (far, arena) = world_with_pursuers(Vec2::ZERO, &[dir * d]);
        let (near, _) = world_with_pursuers(Vec2::ZERO, &[dir * (d - shrink)]);
        let r_far = cast_rays(&far, &arena, &sensing).0.ranges[k];
        let r_near = cast_rays(&near, &arena, &sensing).0.ranges[k];
        prop_assert!(r_near <= r_far);
    }

    #[test]
    fn lidar_rotates_with_the_scene(
        pts in prop::collection::vec((1.5f64..14.0, 0.0f64..TAU), 1..5),
        shift in 1usize..36,
    ) {
        let sensing = SensingConfig::desk();
        let step = TAU / 36.0;
        let base: Vec<Vec2> = pts.iter().map(|&(r, a)| Vec2::from_angle(a) * r).collect();
        let rotated: Vec<Vec2> = base.iter().map(|p| p.rotated(step * shift as f64)).collect();
        let (w0, arena) = world_with_pursuers(Vec2::ZERO, &base);
        let (w1, _) = world_with_pursuers(Vec2::ZERO, &rotated);
        let a = cast_rays(&w0, &arena, &sensing).0.ranges;
        let b = cast_rays(&w1, &arena, &sensing).0.ranges;
        for i in 0..36 {
            prop_assert!((a[i] - b[(i + shift) % 36]).abs() < 1e-9, "ray {}: {} vs {}", i, a[i], b[(i + shift) % 36]);
        }
    }

    #[test]
    fn boundary_scan_is_consistent(x in -49.0f64..49.0, y in -49.0f64..49.0) {
        let arena = ArenaConfig::desk();
        let n_s = 36;
        let pos = Vec2::new(x, y);
        let scan = boundary_scan(pos, &arena, n_s);
        let d = nearest_boundary_distance(pos, &arena);
        let min = scan.distances.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= d - 1e-9);
        prop_assert!(min <= d + TAU * d / n_s as f64 + 1e-9);
    }

    #[test]
    fn composite_is_linear(
        b1 in -5.0f64..5.0, d1 in -5.0f64..5.0,
        b2 in -5.0f64..5.0, d2 in -5.0f64..5.0,
        c in -3.0f64..3.0,
        wsum in 0.0f64..3.0, m in 0usize..5, t_f in 0.0f64..0.5,
    ) {
        let lhs = compose_reward(b1 + c * b2, d1 + c * d2, wsum, m, t_f);
        let rhs = compose_reward(b1, d1, wsum, m, t_f) + c * compose_reward(b2, d2, wsum, m, t_f);
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn closing_pursuer_raises_the_shortfall(
        prev in 3.0f64..14.0,
        frac in 0.0f64..1.0,
        eps in 0.01f64..0.5,
    ) {
        let arena = ArenaConfig::desk();
        let det = |dist: f64| Detection { id: 0, distance: dist, bearing: 0.0, speed: 5.0, theta: 0.5 };
        // Keep the pursuer from receding faster than the relative speed bound.
        let c = (arena.v_e_max - 5.0 * 0.5f64.cos()) * arena.dt;
        let d = prev - 2.0 + frac * (2.0 + c);
        let hist = DetectionHistory::from_detections(&[det(prev)]);
        let far = reward_pursuers(&[det(d)], &mut hist.clone(), &arena);
        let near = reward_pursuers(&[det(d - eps)], &mut hist.clone(), &arena);
        prop_assert!(near.r_d > far.r_d);
    }

    #[test]
    fn pfm_is_rotation_equivariant(
        pts in prop::collection::vec((0.5f64..15.0, 0.0f64..TAU), 0..5),
        d_b in 0.1f64..50.0,
        wall in 0.0f64..TAU,
        phi in 0.0f64..TAU,
    ) {
        let g = PfmGains::default();
        let dets = |rot: f64| -> Vec<Detection> {
            pts.iter().enumerate().map(|(id, &(r, a))| Detection {
                id, distance: r, bearing: a + rot, speed: 5.0, theta: 0.0,
            }).collect()
        };
        let f0 = net_force(&dets(0.0), d_b, Vec2::from_angle(wall), &g);
        let f1 = net_force(&dets(phi), d_b, Vec2::from_angle(wall + phi), &g);
        let r = f0.rotated(phi);
        let tol = 1e-9 * (1.0 + f0.norm());
        prop_assert!((r.x - f1.x).abs() < tol && (r.y - f1.y).abs() < tol);
    }

    #[test]
    fn pfm_action_norm(fx in -10.0f64..10.0, fy in -10.0f64..10.0) {
        let a = pfm_action(Vec2::new(fx, fy), 15.0);
        let n = a.norm();
        prop_assert!(n == 0.0 || (n - 15.0).abs() < 1e-9);
    }

    #[test]
    fn extra_pursuer_ahead_never_pulls_forward(
        pts in prop::collection::vec((0.5f64..15.0, 0.0f64..TAU), 0..4),
        d_b in 0.5f64..50.0,
        wall in 0.0f64..TAU,
        r in 0.5f64..15.0,
    ) {
        let g = PfmGains::default();
        let mut dets: Vec<Detection> = pts.iter().enumerate().map(|(id, &(r, a))| Detection {
            id, distance: r, bearing: a, speed: 5.0, theta: 0.0,
        }).collect();
        let dir = Vec2::from_angle(wall);
        let before = net_force(&dets, d_b, dir, &g);
        let ahead = before.angle();
        dets.push(Detection { id: 99, distance: r, bearing: ahead, speed: 5.0, theta: 0.0 });
        let after = net_force(&dets, d_b, dir, &g);
        let u = Vec2::from_angle(ahead);
        prop_assert!(after.dot(u) <= before.dot(u) + 1e-12);
    }

    #[test]
    fn scaffold_penalty_is_monotone(r_r in -5.0f64..5.0, g1 in 0.0f64..5.0, g2 in 0.0f64..5.0) {
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let (b1, s1) = scaffold_select(r_r, r_r + lo, -100.0, 20.0);
        let (b2, s2) = scaffold_select(r_r, r_r + hi, -100.0, 20.0);
        prop_assert_eq!(b1, Branch::Planner);
        prop_assert_eq!(b2, Branch::Planner);
        prop_assert!(s2 <= s1);
        prop_assert!(s1 <= r_r);
    }

    #[test]
    fn gap_is_bounded_below(r_r in -10.0f64..10.0, r_p in -10.0f64..10.0) {
        let d = reward_gap(r_r, r_p, 1e-6);
        prop_assert!(d >= -100.0);
        if r_r >= r_p {
            prop_assert!(d >= 0.0);
        }
    }
}
