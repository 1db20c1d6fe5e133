//! Squashed-Gaussian actor, Q critic with a soft-updated target, and their
//! gradient steps.
//!
//! The actor maps a state to `[mean_x, mean_y, log_std_x, log_std_y]`. An
//! action is `tanh(mean + exp(log_std) * noise)` with standard normal noise,
//! so each component lies in `(-1, 1)`. The critic scores the state together
//! with the action the environment would execute, i.e. the action scaled back
//! onto the unit disc when its norm exceeds one.

use rand::Rng;
use rand_distr::StandardNormal;

use super::mlp::{ForwardCache, Mlp};
use super::replay::ExperienceTuple;
use super::{NeuralError, TrainConfig};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
pub const ACTION_DIM: usize = 2;

const HALF_LN_TAU: f64 = 0.918_938_533_204_672_7;

#[derive(Debug, Clone, PartialEq)]
pub struct ActorOutput {
    pub mean: [f64; 2],
    /// Clamped log standard deviation.
    pub log_std: [f64; 2],
    pub raw_log_std: [f64; 2],
    pub noise: [f64; 2],
    pub action: [f64; 2],
    pub log_prob: f64,
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `ln(1 - tanh(u)^2)` without cancellation for large `|u|`.
#[inline]
fn log_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

fn check_width(net: &Mlp, got: usize, what: &str) -> Result<(), NeuralError> {
    if net.input_dim() == got {
        Ok(())
    } else {
        Err(NeuralError::Shape(format!(
            "{what} expects input width {}, got {got}",
            net.input_dim()
        )))
    }
}

fn squash(out: &[f64], noise: [f64; 2]) -> ActorOutput {
    let mut o = ActorOutput {
        mean: [out[0], out[1]],
        log_std: [0.0; 2],
        raw_log_std: [out[2], out[3]],
        noise,
        action: [0.0; 2],
        log_prob: 0.0,
    };
    for k in 0..ACTION_DIM {
        let ls = o.raw_log_std[k].clamp(LOG_STD_MIN, LOG_STD_MAX);
        let u = o.mean[k] + ls.exp() * noise[k];
        o.log_std[k] = ls;
        o.action[k] = u.tanh();
        o.log_prob += -0.5 * noise[k] * noise[k] - ls - HALF_LN_TAU - log_one_minus_tanh_sq(u);
    }
    o
}

/// Actor output for an explicit noise draw.
pub fn actor_with_noise(net: &Mlp, s: &[f64], noise: [f64; 2]) -> Result<ActorOutput, NeuralError> {
    check_width(net, s.len(), "actor")?;
    Ok(squash(&net.forward(s), noise))
}

pub fn sample_noise<R: Rng + ?Sized>(rng: &mut R) -> [f64; 2] {
    [rng.sample(StandardNormal), rng.sample(StandardNormal)]
}

pub fn forward_actor<R: Rng + ?Sized>(
    net: &Mlp,
    s: &[f64],
    rng: &mut R,
) -> Result<ActorOutput, NeuralError> {
    actor_with_noise(net, s, sample_noise(rng))
}

/// Noise-free action `tanh(mean)`.
pub fn deterministic_action(net: &Mlp, s: &[f64]) -> Result<[f64; 2], NeuralError> {
    check_width(net, s.len(), "actor")?;
    let out = net.forward(s);
    Ok([out[0].tanh(), out[1].tanh()])
}

/// The action as the environment executes it: commands beyond unit norm are
/// scaled back onto the unit circle.
pub fn effective_action(a: &[f64; 2]) -> [f64; 2] {
    let n = a[0].hypot(a[1]);
    if n > 1.0 {
        [a[0] / n, a[1] / n]
    } else {
        *a
    }
}

/// Pull a gradient w.r.t. the effective action back to the raw action.
fn effective_action_vjp(a: &[f64; 2], g: [f64; 2]) -> [f64; 2] {
    let n = a[0].hypot(a[1]);
    if n > 1.0 {
        let u = [a[0] / n, a[1] / n];
        let radial = u[0] * g[0] + u[1] * g[1];
        [(g[0] - radial * u[0]) / n, (g[1] - radial * u[1]) / n]
    } else {
        g
    }
}

fn critic_input(s: &[f64], a: &[f64; 2], buf: &mut Vec<f64>) {
    buf.clear();
    buf.extend_from_slice(s);
    buf.extend_from_slice(&effective_action(a));
}

pub fn forward_critic(net: &Mlp, s: &[f64], a: &[f64; 2]) -> Result<f64, NeuralError> {
    check_width(net, s.len() + ACTION_DIM, "critic")?;
    let mut x = Vec::with_capacity(s.len() + ACTION_DIM);
    critic_input(s, a, &mut x);
    Ok(net.forward(&x)[0])
}

/// Actor, online critic and target critic.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyBundle {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_critic: Mlp,
}

impl PolicyBundle {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, hidden: &[usize], rng: &mut R) -> Self {
        let mut aw = vec![state_dim];
        aw.extend_from_slice(hidden);
        aw.push(2 * ACTION_DIM);
        let mut cw = vec![state_dim + ACTION_DIM];
        cw.extend_from_slice(hidden);
        cw.push(1);
        let actor = Mlp::random(&aw, rng);
        let critic = Mlp::random(&cw, rng);
        Self {
            actor,
            target_critic: critic.clone(),
            critic,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn is_finite(&self) -> bool {
        self.actor.is_finite() && self.critic.is_finite() && self.target_critic.is_finite()
    }
}

/// Bootstrapped regression targets; terminal transitions use the reward alone.
pub fn critic_target<R: Rng + ?Sized>(
    batch: &[&ExperienceTuple],
    nets: &PolicyBundle,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<Vec<f64>, NeuralError> {
    batch
        .iter()
        .map(|t| {
            if t.terminal {
                return Ok(t.reward);
            }
            let next = forward_actor(&nets.actor, &t.s_next, rng)?;
            let q = forward_critic(&nets.target_critic, &t.s_next, &next.action)?;
            Ok(t.reward + cfg.gamma * (q - cfg.alpha * next.log_prob))
        })
        .collect()
}

/// Mean squared error of the critic against fixed targets, with its gradient.
pub fn critic_loss_grad(
    critic: &Mlp,
    batch: &[&ExperienceTuple],
    targets: &[f64],
) -> (f64, Vec<f64>) {
    let n = batch.len() as f64;
    let mut grad = vec![0.0; critic.params().len()];
    let mut cache = ForwardCache::default();
    let mut x = Vec::new();
    let mut loss = 0.0;
    for (t, y) in batch.iter().zip(targets) {
        critic_input(&t.s, &t.action, &mut x);
        let q = critic.forward_cached(&x, &mut cache)[0];
        let err = q - y;
        loss += err * err / n;
        critic.backward(&mut cache, &[2.0 * err / n], &mut grad, None);
    }
    (loss, grad)
}

/// Entropy-regularized actor objective
/// `mean(alpha * log_pi(a|s) - (Q(s, a) - b))` over reparameterized samples,
/// with gradient w.r.t. the actor parameters. `b` is the batch-mean Q unless a
/// fixed baseline is supplied; it is treated as a constant either way.
/// Returns `(loss, grad, baseline)`.
pub fn actor_loss_grad(
    actor: &Mlp,
    critic: &Mlp,
    states: &[&[f64]],
    noise: &[[f64; 2]],
    alpha: f64,
    baseline: Option<f64>,
) -> (f64, Vec<f64>, f64) {
    assert_eq!(states.len(), noise.len());
    let n = states.len() as f64;
    let mut grad = vec![0.0; actor.params().len()];
    let mut a_cache = ForwardCache::default();
    let mut c_cache = ForwardCache::default();
    let mut x = Vec::new();
    let mut d_in = vec![0.0; critic.input_dim()];
    let mut d_out = [0.0; 4];
    let mut q_sum = 0.0;
    let mut logp_sum = 0.0;
    for (s, xi) in states.iter().zip(noise) {
        let out = squash(actor.forward_cached(s, &mut a_cache), *xi);
        critic_input(s, &out.action, &mut x);
        q_sum += critic.forward_cached(&x, &mut c_cache)[0];
        logp_sum += out.log_prob;
        critic.input_gradient(&mut c_cache, &[1.0], &mut d_in);
        let dq_da = effective_action_vjp(&out.action, [d_in[s.len()], d_in[s.len() + 1]]);
        for k in 0..ACTION_DIM {
            let a = out.action[k];
            let sigma = out.log_std[k].exp();
            let dl_du = alpha * 2.0 * a - dq_da[k] * (1.0 - a * a);
            d_out[k] = dl_du / n;
            let raw = out.raw_log_std[k];
            d_out[2 + k] = if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
                (dl_du * sigma * xi[k] - alpha) / n
            } else {
                0.0
            };
        }
        actor.backward(&mut a_cache, &d_out, &mut grad, None);
    }
    let b = baseline.unwrap_or(q_sum / n);
    let loss = alpha * logp_sum / n - (q_sum / n - b);
    (loss, grad, b)
}

fn clip_and_step(net: &mut Mlp, grad: &mut [f64], lr: f64, clip: f64) {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let scale = if norm > clip { clip / norm } else { 1.0 };
    for (p, g) in net.params_mut().iter_mut().zip(grad.iter()) {
        *p -= lr * scale * g;
    }
}

fn ensure_finite(which: &'static str, loss: f64, grad: &[f64]) -> Result<(), NeuralError> {
    if loss.is_finite() && grad.iter().all(|g| g.is_finite()) {
        Ok(())
    } else {
        Err(NeuralError::Divergence { which, loss })
    }
}

/// One SGD step on the critic regression loss. Returns the pre-step loss.
pub fn critic_update<R: Rng + ?Sized>(
    batch: &[&ExperienceTuple],
    nets: &mut PolicyBundle,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<f64, NeuralError> {
    assert!(!batch.is_empty(), "empty batch");
    let targets = critic_target(batch, nets, cfg, rng)?;
    let (loss, mut grad) = critic_loss_grad(&nets.critic, batch, &targets);
    ensure_finite("critic", loss, &grad)?;
    clip_and_step(&mut nets.critic, &mut grad, cfg.lr_critic, cfg.grad_clip);
    Ok(loss)
}

/// One SGD step on the actor objective. Returns the pre-step loss.
pub fn actor_update<R: Rng + ?Sized>(
    batch: &[&ExperienceTuple],
    nets: &mut PolicyBundle,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<f64, NeuralError> {
    assert!(!batch.is_empty(), "empty batch");
    let states: Vec<&[f64]> = batch.iter().map(|t| t.s.as_slice()).collect();
    if let Some(s) = states.first() {
        check_width(&nets.actor, s.len(), "actor")?;
    }
    let noise: Vec<[f64; 2]> = states.iter().map(|_| sample_noise(rng)).collect();
    let (loss, mut grad, _) =
        actor_loss_grad(&nets.actor, &nets.critic, &states, &noise, cfg.alpha, None);
    ensure_finite("actor", loss, &grad)?;
    clip_and_step(&mut nets.actor, &mut grad, cfg.lr_actor, cfg.grad_clip);
    Ok(loss)
}

/// Polyak averaging `target <- (1 - tau) * target + tau * online`.
pub fn soft_update(target: &mut Mlp, online: &Mlp, tau: f64) -> Result<(), NeuralError> {
    if !target.same_shape(online) {
        return Err(NeuralError::Shape(format!(
            "target {:?} vs online {:?}",
            target.widths(),
            online.widths()
        )));
    }
    for (t, o) in target.params_mut().iter_mut().zip(online.params()) {
        *t = (1.0 - tau) * *t + tau * o;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::replay::Branch;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tuple(s: Vec<f64>, a: [f64; 2], r: f64, terminal: bool) -> ExperienceTuple {
        ExperienceTuple {
            s_next: s.iter().map(|x| x * 0.9).collect(),
            s,
            action: a,
            reward: r,
            terminal,
            branch: Branch::Actor,
        }
    }

    #[test]
    fn zero_network_outputs() {
        let actor = Mlp::zeros(&[3, 4, 4]);
        let out = actor_with_noise(&actor, &[0.0; 3], [0.5, -1.0]).unwrap();
        assert_eq!(out.mean, [0.0, 0.0]);
        assert_eq!(out.action, [0.5f64.tanh(), (-1.0f64).tanh()]);
        let critic = Mlp::zeros(&[5, 4, 1]);
        assert_eq!(
            forward_critic(&critic, &[1.0, 2.0, 3.0], &[0.2, 0.1]).unwrap(),
            0.0
        );
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let actor = Mlp::zeros(&[3, 4, 4]);
        assert!(actor_with_noise(&actor, &[0.0; 2], [0.0; 2]).is_err());
        let critic = Mlp::zeros(&[5, 4, 1]);
        assert!(forward_critic(&critic, &[0.0; 2], &[0.0; 2]).is_err());
    }

    #[test]
    fn log_std_is_clamped() {
        let mut actor = Mlp::zeros(&[1, 4]);
        // bias of output 2 and 3 (raw log-std)
        let n = actor.params().len();
        actor.params_mut()[n - 2] = -20.0;
        actor.params_mut()[n - 1] = 9.0;
        let out = actor_with_noise(&actor, &[0.0], [0.1, 0.1]).unwrap();
        assert_eq!(out.log_std, [LOG_STD_MIN, LOG_STD_MAX]);
    }

    #[test]
    fn sampling_is_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let actor = Mlp::random(&[3, 8, 4], &mut rng);
        let s = [0.1, 0.2, 0.3];
        let a = forward_actor(&actor, &s, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = forward_actor(&actor, &s, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
        assert!(a.action.iter().all(|x| x.abs() <= 1.0));
    }

    #[test]
    fn target_degenerate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let nets = PolicyBundle::new(3, &[8], &mut rng);
        let batch_owned = [tuple(vec![0.1, 0.2, 0.3], [0.1, 0.0], -0.4, false),
            tuple(vec![0.3, 0.2, 0.1], [0.0, 0.5], 0.7, true)];
        let batch: Vec<&ExperienceTuple> = batch_owned.iter().collect();
        let cfg = TrainConfig {
            gamma: 0.0,
            ..TrainConfig::default()
        };
        let y = critic_target(&batch, &nets, &cfg, &mut rng).unwrap();
        assert_eq!(y[0], -0.4);
        assert_eq!(y[1], 0.7);

        let mut zero = nets.clone();
        zero.target_critic = Mlp::zeros(zero.target_critic.widths());
        let cfg = TrainConfig {
            alpha: 0.0,
            ..TrainConfig::default()
        };
        let y = critic_target(&batch, &zero, &cfg, &mut rng).unwrap();
        assert_eq!(y, vec![-0.4, 0.7]);
    }

    #[test]
    fn zero_critic_zero_alpha_leaves_actor_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut nets = PolicyBundle::new(3, &[8], &mut rng);
        nets.critic = Mlp::zeros(nets.critic.widths());
        let before = nets.actor.clone();
        let owned = [tuple(vec![0.1, 0.2, 0.3], [0.1, 0.0], -0.4, false)];
        let batch: Vec<&ExperienceTuple> = owned.iter().collect();
        let cfg = TrainConfig {
            alpha: 0.0,
            ..TrainConfig::default()
        };
        actor_update(&batch, &mut nets, &cfg, &mut rng).unwrap();
        assert_eq!(nets.actor, before);
    }

    #[test]
    fn zero_reward_batch_has_zero_loss_on_zero_critic() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut nets = PolicyBundle::new(3, &[8], &mut rng);
        nets.critic = Mlp::zeros(nets.critic.widths());
        let owned = [tuple(vec![0.1, 0.2, 0.3], [0.1, 0.0], 0.0, true)];
        let batch: Vec<&ExperienceTuple> = owned.iter().collect();
        let loss = critic_update(&batch, &mut nets, &TrainConfig::default(), &mut rng).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn soft_update_rule() {
        let online = Mlp::from_params(&[1, 1], vec![2.0, 2.0]).unwrap();
        let mut t = Mlp::from_params(&[1, 1], vec![0.0, 0.0]).unwrap();
        soft_update(&mut t, &online, 0.5).unwrap();
        assert_eq!(t.params(), &[1.0, 1.0]);
        soft_update(&mut t, &online, 0.0).unwrap();
        assert_eq!(t.params(), &[1.0, 1.0]);
        soft_update(&mut t, &online, 1.0).unwrap();
        assert_eq!(t, online);
        let mut wrong = Mlp::zeros(&[2, 1]);
        assert!(soft_update(&mut wrong, &online, 0.5).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut nets = PolicyBundle::new(3, &[8], &mut rng);
        let owned = [tuple(vec![0.1, 0.2, 0.3], [0.1, 0.0], f64::NAN, true)];
        let batch: Vec<&ExperienceTuple> = owned.iter().collect();
        let before = nets.critic.clone();
        let err = critic_update(&batch, &mut nets, &TrainConfig::default(), &mut rng);
        assert!(matches!(err, Err(NeuralError::Divergence { .. })));
        assert_eq!(nets.critic, before);
    }
}
