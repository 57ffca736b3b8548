use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::buffer::{Boundary, RolloutBuffer, Step};
use super::env::Environment;
use super::policy::{greedy_action, sample_action};
use super::update::{ppo_update, Optimizers, UpdateStats};
use super::PpoConfig;
use crate::error::{Error, Result};
use crate::net::DenseNet;
use crate::neuron::{i_threshold, NeuronParams};

/// Everything about a training run that is not a PPO hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub hidden: Vec<usize>,
    pub total_steps: u64,
    /// Environment instances collecting in parallel, each with its own streams.
    pub n_envs: usize,
    /// Greedy evaluation cadence in environment steps; 0 evaluates only at the end.
    pub eval_interval: u64,
    pub eval_episodes: usize,
    /// Initial output-layer weight scale for the actor (small = near-uniform policy).
    pub actor_output_scale: f64,
    /// Multiplier on the actor's initial hidden weights. Spreading the
    /// pre-activations away from the threshold leaves fewer units in the
    /// soft sub-threshold tail that spiking neurons cannot reproduce.
    pub actor_hidden_gain: f64,
    /// Initial hidden bias measured from the firing threshold.
    pub hidden_bias_offset: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            total_steps: 500_000,
            n_envs: 4,
            eval_interval: 20_480,
            eval_episodes: 50,
            actor_output_scale: 0.01,
            actor_hidden_gain: 3.0,
            hidden_bias_offset: 0.0,
        }
    }
}

impl TrainSettings {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.hidden.contains(&0) {
            out.push("hidden layer widths must be positive".into());
        }
        if self.n_envs == 0 {
            out.push("n_envs must be at least 1".into());
        }
        if self.eval_episodes == 0 {
            out.push("eval_episodes must be at least 1".into());
        }
        if !(self.actor_output_scale.is_finite() && self.actor_output_scale > 0.0) {
            out.push("actor_output_scale must be positive".into());
        }
        if !(self.actor_hidden_gain.is_finite() && self.actor_hidden_gain > 0.0) {
            out.push("actor_hidden_gain must be positive".into());
        }
        if !self.hidden_bias_offset.is_finite() {
            out.push("hidden_bias_offset must be finite".into());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: u64,
    pub mean_reward: f64,
    pub std_reward: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub actor: DenseNet,
    pub critic: DenseNet,
    pub heads: Vec<usize>,
    pub curve: Vec<CurvePoint>,
    pub updates: Vec<UpdateStats>,
    pub global_step: u64,
}

fn mix(seed: u64, salt: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(salt);
    rng.gen()
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Fresh actor and critic. Hidden biases start at the firing threshold so
/// each unit begins on the steep part of its rate curve instead of in the
/// silent, zero-gradient region. The actor's hidden weights are then scaled
/// by `actor_hidden_gain` and its output weights by `actor_output_scale`.
pub fn init_networks(
    obs_dim: usize,
    heads: &[usize],
    settings: &TrainSettings,
    params: NeuronParams,
    seed: u64,
) -> Result<(DenseNet, DenseNet)> {
    let bias = i_threshold(&params) + settings.hidden_bias_offset;
    let mut dims = vec![obs_dim];
    dims.extend(&settings.hidden);
    let mut actor_dims = dims.clone();
    actor_dims.push(heads.iter().sum());
    dims.push(1);
    let mut actor = DenseNet::init(&actor_dims, mix(seed, 1), params)?
        .with_hidden_bias(bias)
        .with_output_scale(settings.actor_output_scale);
    let n = actor.layers().len();
    for layer in &mut actor.layers_mut()[..n - 1] {
        layer
            .weights_mut()
            .iter_mut()
            .for_each(|w| *w *= settings.actor_hidden_gain);
    }
    let critic = DenseNet::init(&dims, mix(seed, 2), params)?.with_hidden_bias(bias);
    Ok((actor, critic))
}

struct Worker<E> {
    env: E,
    policy_rng: ChaCha8Rng,
    episode_rng: ChaCha8Rng,
    obs: Vec<f64>,
}

impl<E: Environment> Worker<E> {
    fn new(mut env: E, seed: u64, index: u64) -> Result<Self> {
        let mut episode_rng = stream(seed, 1000 + index);
        let obs = env.reset(episode_rng.gen())?;
        Ok(Self {
            env,
            policy_rng: stream(seed, 100 + index),
            episode_rng,
            obs,
        })
    }

    fn collect(&mut self, actor: &DenseNet, critic: &DenseNet, n: usize) -> Result<RolloutBuffer> {
        let mut buf = RolloutBuffer::new();
        let heads = self.env.action_heads().to_vec();
        for k in 0..n {
            let logits = actor.predict(&self.obs)?;
            let active = self.env.active_heads();
            let (actions, log_prob) = sample_action(&logits, &heads, &active, &mut self.policy_rng)?;
            let value = critic.predict(&self.obs)?[0];
            let tr = self.env.step(&actions)?;
            let boundary = if tr.terminated {
                Boundary::Terminal
            } else if tr.truncated || k + 1 == n {
                Boundary::Truncated(critic.predict(&tr.observation)?[0])
            } else {
                Boundary::Continue
            };
            buf.push(Step {
                observation: std::mem::take(&mut self.obs),
                actions,
                active,
                log_prob,
                reward: tr.reward,
                value,
                boundary,
            });
            self.obs = if tr.done() {
                self.env.reset(self.episode_rng.gen())?
            } else {
                tr.observation
            };
        }
        Ok(buf)
    }
}

/// Collect `steps` transitions from a fresh episode of `env` with the
/// streams worker 0 of a training run with this seed would use.
pub fn collect_rollout<E: Environment>(
    env: E,
    actor: &DenseNet,
    critic: &DenseNet,
    steps: usize,
    seed: u64,
) -> Result<RolloutBuffer> {
    Worker::new(env, seed, 0)?.collect(actor, critic, steps)
}

/// Run greedy episodes, one per seed; returns the undiscounted episode returns.
pub fn evaluate_greedy<E: Environment>(env: &mut E, actor: &DenseNet, seeds: &[u64]) -> Result<Vec<f64>> {
    let heads = env.action_heads().to_vec();
    seeds
        .iter()
        .map(|&seed| {
            let mut obs = env.reset(seed)?;
            let mut total = 0.0;
            loop {
                let actions = greedy_action(&actor.predict(&obs)?, &heads);
                let tr = env.step(&actions)?;
                total += tr.reward;
                if tr.done() {
                    return Ok(total);
                }
                obs = tr.observation;
            }
        })
        .collect()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Alternate collection and PPO updates until `settings.total_steps`
/// environment steps have been taken.
///
/// `make_env(k)` builds instance `k`; instances `0..n_envs` collect and
/// instance `n_envs` is used for evaluation. Rollouts from all instances are
/// merged in instance order, so results do not depend on thread scheduling.
pub fn train<E, F>(
    make_env: F,
    cfg: &PpoConfig,
    settings: &TrainSettings,
    params: NeuronParams,
    seed: u64,
) -> Result<TrainOutcome>
where
    E: Environment,
    F: Fn(usize) -> Result<E> + Sync,
{
    cfg.validate()?;
    let problems = settings.problems();
    if !problems.is_empty() {
        return Err(Error::InvalidConfig(problems));
    }
    let mut eval_env = make_env(settings.n_envs)?;
    let heads = eval_env.action_heads().to_vec();
    let (mut actor, mut critic) = init_networks(eval_env.observation_dim(), &heads, settings, params, seed)?;
    let mut curve = Vec::new();
    let mut updates = Vec::new();
    if settings.total_steps == 0 {
        return Ok(TrainOutcome {
            actor,
            critic,
            heads,
            curve,
            updates,
            global_step: 0,
        });
    }

    let mut workers = (0..settings.n_envs)
        .map(|k| Worker::new(make_env(k)?, seed, k as u64))
        .collect::<Result<Vec<_>>>()?;
    let mut opt = Optimizers::new(&actor, &critic, cfg);
    let mut update_rng = stream(seed, 3);
    let mut eval_rng = stream(seed, 4);
    let eval_seeds: Vec<u64> = (0..settings.eval_episodes).map(|_| eval_rng.gen()).collect();

    let mut global_step = 0u64;
    let mut next_eval = settings.eval_interval;
    while global_step < settings.total_steps {
        let batch = (settings.total_steps - global_step).min(cfg.steps_per_update as u64) as usize;
        let n = workers.len();
        let shares: Vec<usize> = (0..n).map(|k| batch / n + usize::from(k < batch % n)).collect();
        let parts = workers
            .par_iter_mut()
            .zip(shares.par_iter())
            .filter(|(_, &share)| share > 0)
            .map(|(w, &share)| w.collect(&actor, &critic, share))
            .collect::<Result<Vec<_>>>()?;
        let mut buffer = RolloutBuffer::new();
        for part in parts {
            buffer.extend(part);
        }
        global_step += buffer.len() as u64;
        let stats = ppo_update(&mut actor, &mut critic, &mut opt, &heads, &buffer, cfg, &mut update_rng)?;
        log::debug!(
            "step {global_step}: policy {:.4} value {:.4} entropy {:.3} clip {:.3} kl {:.4}",
            stats.policy_loss,
            stats.value_loss,
            stats.entropy,
            stats.clip_fraction,
            stats.approx_kl
        );
        updates.push(stats);

        let finished = global_step >= settings.total_steps;
        if (settings.eval_interval > 0 && global_step >= next_eval) || finished {
            while settings.eval_interval > 0 && next_eval <= global_step {
                next_eval += settings.eval_interval;
            }
            let returns = evaluate_greedy(&mut eval_env, &actor, &eval_seeds)?;
            let (mean_reward, std_reward) = mean_std(&returns);
            log::info!("step {global_step}: greedy return {mean_reward:.3} ± {std_reward:.3}");
            curve.push(CurvePoint {
                step: global_step,
                mean_reward,
                std_reward,
            });
        }
    }
    Ok(TrainOutcome {
        actor,
        critic,
        heads,
        curve,
        updates,
        global_step,
    })
}
