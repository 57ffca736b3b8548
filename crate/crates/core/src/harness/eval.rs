use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::LoadedConfig;
use super::convert::spiking_net_for;
use crate::ctf::{CtfEnv, MapSpec, Scenario, Terminal};
use crate::error::{Error, Result};
use crate::net::checkpoint::{Checkpoint, NetRole};
use crate::net::DenseNet;
use crate::ppo::policy::{greedy_action, sample_action};
use crate::ppo::Environment;
use crate::spikesim::SpikingNet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Rate,
    Spike,
}

impl std::str::FromStr for EvalMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rate" => Ok(EvalMode::Rate),
            "spike" => Ok(EvalMode::Spike),
            other => Err(Error::InvalidConfig(vec![format!(
                "mode must be rate or spike, got {other:?}"
            )])),
        }
    }
}

/// Something that maps an observation to logits.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Controller {
    Rate(DenseNet),
    Spike(SpikingNet),
    /// Uniformly random joint actions; the untrained baseline.
    Random,
}

impl Controller {
    fn logits(&mut self, obs: &[f64], width: usize) -> Result<Vec<f64>> {
        match self {
            Controller::Rate(net) => net.predict(obs),
            Controller::Spike(snet) => snet.infer(obs),
            Controller::Random => Ok(vec![0.0; width]),
        }
    }
}

/// Terminal-condition statistics over a batch of evaluation episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub config_hash: String,
    pub mode: EvalMode,
    pub greedy: bool,
    pub episodes: usize,
    pub master_seed: u64,
    pub flag_capture: f64,
    pub defeated: f64,
    pub lost_flag: f64,
    pub time_up: f64,
    pub mean_reward: f64,
    pub mean_episode_length: f64,
    /// Wall-clock microseconds per decision; informational only.
    pub latency_us: f64,
}

impl EvalReport {
    pub fn percentage(&self, t: Terminal) -> f64 {
        match t {
            Terminal::FlagCapture => self.flag_capture,
            Terminal::Defeated => self.defeated,
            Terminal::LostFlag => self.lost_flag,
            Terminal::TimeUp => self.time_up,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Report(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Report(e.message().to_string()))
    }

    pub fn summary(&self) -> String {
        format!(
            "{} episodes ({}, {}): Flag Capture {:.1}%  Defeated {:.1}%  Lost Flag {:.1}%  Time-up {:.1}%  mean reward {:.3}  latency {:.1} us",
            self.episodes,
            match self.mode {
                EvalMode::Rate => "rate",
                EvalMode::Spike => "spike",
            },
            if self.greedy { "greedy" } else { "sampled" },
            self.flag_capture,
            self.defeated,
            self.lost_flag,
            self.time_up,
            self.mean_reward,
            self.latency_us
        )
    }
}

/// Per-episode seeds derived from a master seed.
pub fn episode_seeds(master_seed: u64, episodes: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    (0..episodes).map(|_| rng.gen()).collect()
}

struct Episode {
    terminal: Terminal,
    reward: f64,
    length: u32,
    decision_secs: f64,
}

fn run_episode(env: &mut CtfEnv, ctl: &mut Controller, greedy: bool, seed: u64) -> Result<Episode> {
    let heads = env.action_heads().to_vec();
    let width: usize = heads.iter().sum();
    let mut obs = env.reset(seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    let mut reward = 0.0;
    let mut length = 0;
    let mut decision_secs = 0.0;
    loop {
        let t0 = Instant::now();
        let logits = ctl.logits(&obs, width)?;
        let actions = if greedy && !matches!(ctl, Controller::Random) {
            greedy_action(&logits, &heads)
        } else {
            sample_action(&logits, &heads, &env.active_heads(), &mut rng)?.0
        };
        decision_secs += t0.elapsed().as_secs_f64();
        let tr = env.step(&actions)?;
        reward += tr.reward;
        length += 1;
        if tr.done() {
            let terminal = env.terminal().expect("finished episode has a terminal condition");
            return Ok(Episode {
                terminal,
                reward,
                length,
                decision_secs,
            });
        }
        obs = tr.observation;
    }
}

/// Play `episodes` games and tabulate how they ended. Episodes run in
/// parallel; each depends only on its own seed, so the result is
/// reproducible for a fixed master seed.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    map: &Arc<MapSpec>,
    scenario: Scenario,
    controller: &Controller,
    mode: EvalMode,
    greedy: bool,
    episodes: usize,
    master_seed: u64,
    config_hash: &str,
) -> Result<EvalReport> {
    if episodes == 0 {
        return Err(Error::InvalidConfig(vec!["episodes must be at least 1".into()]));
    }
    let env = CtfEnv::new(map.clone(), scenario)?;
    let seeds = episode_seeds(master_seed, episodes);
    let results = seeds
        .par_iter()
        .map_init(
            || (env.clone(), controller.clone()),
            |(env, ctl), &seed| run_episode(env, ctl, greedy, seed),
        )
        .collect::<Result<Vec<_>>>()?;
    let n = episodes as f64;
    let pct = |t: Terminal| 100.0 * results.iter().filter(|e| e.terminal == t).count() as f64 / n;
    let decisions: u32 = results.iter().map(|e| e.length).sum();
    Ok(EvalReport {
        config_hash: config_hash.to_string(),
        mode,
        greedy,
        episodes,
        master_seed,
        flag_capture: pct(Terminal::FlagCapture),
        defeated: pct(Terminal::Defeated),
        lost_flag: pct(Terminal::LostFlag),
        time_up: pct(Terminal::TimeUp),
        mean_reward: results.iter().map(|e| e.reward).sum::<f64>() / n,
        mean_episode_length: decisions as f64 / n,
        latency_us: 1e6 * results.iter().map(|e| e.decision_secs).sum::<f64>() / decisions.max(1) as f64,
    })
}

/// Observations visited by `actor` (sampling its policy) from fresh episodes.
pub fn sample_observations(
    map: &Arc<MapSpec>,
    scenario: Scenario,
    actor: &DenseNet,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut env = CtfEnv::new(map.clone(), scenario)?;
    let heads = env.action_heads().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut obs = env.reset(rng.gen())?;
    while out.len() < count {
        let logits = actor.predict(&obs)?;
        let (actions, _) = sample_action(&logits, &heads, &env.active_heads(), &mut rng)?;
        out.push(std::mem::take(&mut obs));
        let tr = env.step(&actions)?;
        obs = if tr.done() {
            env.reset(rng.gen())?
        } else {
            tr.observation
        };
    }
    Ok(out)
}

/// Evaluate a checkpoint (or, with `None`, the uniformly random policy)
/// under the configured scenario. Spike mode converts a rate actor on the
/// fly using the config's spiking settings.
pub fn cmd_eval(
    cfg: &LoadedConfig,
    checkpoint: Option<&Checkpoint>,
    mode: EvalMode,
    greedy: bool,
    episodes: usize,
) -> Result<EvalReport> {
    let controller = match checkpoint {
        None => Controller::Random,
        Some(ck) if ck.role == NetRole::Critic => {
            return Err(Error::IncompatibleNetwork("cannot evaluate a critic checkpoint".into()))
        }
        Some(ck) => {
            if ck.net.output_dim()
                != CtfEnv::new(cfg.map.clone(), cfg.scenario())?
                    .action_heads()
                    .iter()
                    .sum::<usize>()
            {
                return Err(Error::IncompatibleNetwork(format!(
                    "checkpoint has {} outputs, which does not match the configured scenario",
                    ck.net.output_dim()
                )));
            }
            match mode {
                EvalMode::Rate => Controller::Rate(ck.net.clone()),
                EvalMode::Spike => Controller::Spike(spiking_net_for(cfg, ck)?),
            }
        }
    };
    evaluate(
        &cfg.map,
        cfg.scenario(),
        &controller,
        mode,
        greedy,
        episodes,
        cfg.config.eval.master_seed,
        &cfg.hash,
    )
}
