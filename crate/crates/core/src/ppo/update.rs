use rand::seq::SliceRandom;
use rand::Rng;

use super::adam::Adam;
use super::buffer::{compute_advantages, RolloutBuffer};
use super::policy::{head_terms, joint_log_prob};
use super::PpoConfig;
use crate::error::{Error, Result};
use crate::net::{DenseNet, ParamGrads};

/// Pointwise clipped surrogate: `(min(f, g), clipped)` with `f = ratio * adv`
/// and `g = clip(ratio, 1 - eps, 1 + eps) * adv`. `clipped` is true when the
/// ratio lies outside the trust interval.
pub fn clipped_surrogate(ratio: f64, advantage: f64, epsilon: f64) -> (f64, bool) {
    let f = ratio * advantage;
    let g = ratio.clamp(1.0 - epsilon, 1.0 + epsilon) * advantage;
    (f.min(g), (ratio - 1.0).abs() > epsilon)
}

/// Diagnostics averaged over every minibatch of one update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub actor_grad_norm: f64,
    pub critic_grad_norm: f64,
    pub minibatches: usize,
}

/// Largest `|pi_new / pi_old - 1|` over the buffer. Zero right after
/// collection with the same actor.
pub fn max_ratio_deviation(actor: &DenseNet, heads: &[usize], buffer: &RolloutBuffer) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in buffer.steps() {
        let logits = actor.predict(&s.observation)?;
        let lp = joint_log_prob(&logits, heads, &s.actions, &s.active);
        worst = worst.max(((lp - s.log_prob).exp() - 1.0).abs());
    }
    Ok(worst)
}

fn clip_grad_norm(grads: &mut ParamGrads, max_norm: f64) -> f64 {
    let norm = grads.l2_norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}

/// Optimizer state for one actor-critic pair.
#[derive(Debug, Clone)]
pub struct Optimizers {
    pub actor: Adam,
    pub critic: Adam,
}

impl Optimizers {
    pub fn new(actor: &DenseNet, critic: &DenseNet, cfg: &PpoConfig) -> Self {
        Self {
            actor: Adam::new(actor, cfg.learning_rate),
            critic: Adam::new(critic, cfg.learning_rate),
        }
    }
}

/// Several epochs of clipped-surrogate minibatch updates on one buffer.
///
/// Per minibatch the actor minimizes `-mean(min(f, g)) - c_ent * entropy` and
/// the critic minimizes `c_v * mean((V - R)^2)`. The two networks share no
/// parameters, so each gets its own gradient, norm clip and Adam state.
pub fn ppo_update<R: Rng>(
    actor: &mut DenseNet,
    critic: &mut DenseNet,
    opt: &mut Optimizers,
    heads: &[usize],
    buffer: &RolloutBuffer,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats> {
    let (advantages, returns) = compute_advantages(buffer, cfg.discount, cfg.gae_lambda)?;
    let steps = buffer.steps();
    let mut order: Vec<usize> = (0..steps.len()).collect();
    let mut stats = UpdateStats::default();
    let eps = cfg.clip_epsilon;

    for _ in 0..cfg.epochs_per_update {
        order.shuffle(rng);
        for batch in order.chunks(cfg.minibatch_size) {
            let n = batch.len() as f64;
            let mut ga = ParamGrads::zeros_like(actor);
            let mut gc = ParamGrads::zeros_like(critic);
            let (mut pl, mut vl, mut ent, mut clipped, mut kl) = (0.0, 0.0, 0.0, 0usize, 0.0);
            for &i in batch {
                let s = &steps[i];
                let adv = advantages[i];

                let (logits, tape) = actor.forward(&s.observation)?;
                let t = head_terms(&logits, heads, &s.actions, &s.active);
                let log_ratio = t.log_prob - s.log_prob;
                let ratio = log_ratio.exp();
                let (surr, was_clipped) = clipped_surrogate(ratio, adv, eps);
                debug_assert!(surr <= ratio * adv, "clipped surrogate exceeds the unclipped term");
                pl -= surr;
                ent += t.entropy;
                clipped += was_clipped as usize;
                kl += (ratio - 1.0) - log_ratio;
                // d(-min(f, g))/d log_prob is -adv * ratio when f is the active branch;
                // when g is strictly smaller the ratio is outside the interval and g is flat.
                let d_lp = if ratio * adv <= surr { -adv * ratio / n } else { 0.0 };
                let out_grad: Vec<f64> = t
                    .d_log_prob
                    .iter()
                    .zip(&t.d_entropy)
                    .map(|(dl, de)| d_lp * dl - cfg.entropy_coefficient * de / n)
                    .collect();
                actor.backward_accumulate(&tape, &out_grad, &mut ga)?;

                let (v, vtape) = critic.forward(&s.observation)?;
                let err = v[0] - returns[i];
                vl += err * err;
                critic.backward_accumulate(&vtape, &[2.0 * cfg.value_loss_coefficient * err / n], &mut gc)?;
            }
            let (pl, vl, ent) = (pl / n, vl / n, ent / n);
            let total = pl + cfg.value_loss_coefficient * vl - cfg.entropy_coefficient * ent;
            if !total.is_finite() || !ga.all_finite() || !gc.all_finite() {
                return Err(Error::NonFinite(format!(
                    "loss {total} (policy {pl}, value {vl}, entropy {ent}) on a minibatch of {} steps",
                    batch.len()
                )));
            }
            stats.actor_grad_norm += clip_grad_norm(&mut ga, cfg.max_grad_norm);
            stats.critic_grad_norm += clip_grad_norm(&mut gc, cfg.max_grad_norm);
            opt.actor.step(actor, &ga);
            opt.critic.step(critic, &gc);

            stats.policy_loss += pl;
            stats.value_loss += vl;
            stats.entropy += ent;
            stats.clip_fraction += clipped as f64 / n;
            stats.approx_kl += kl / n;
            stats.minibatches += 1;
        }
    }
    if stats.minibatches > 0 {
        let m = stats.minibatches as f64;
        stats.policy_loss /= m;
        stats.value_loss /= m;
        stats.entropy /= m;
        stats.clip_fraction /= m;
        stats.approx_kl /= m;
        stats.actor_grad_norm /= m;
        stats.critic_grad_norm /= m;
    }
    Ok(stats)
}
