use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::LoadedConfig;
use super::report::CurveFile;
use super::BUILD_ID;
use crate::ctf::CtfEnv;
use crate::error::{Error, Result};
use crate::net::checkpoint::{Checkpoint, NetRole, TrainingMeta};
use crate::ppo::{train, TrainOutcome};

/// Index of everything a training run wrote. Contains no timestamps, so
/// rerunning a config reproduces it byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub config_hash: String,
    pub build: String,
    pub runs: Vec<ManifestEntry>,
}

/// Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub seed: u64,
    pub global_step: u64,
    pub actor: String,
    pub critic: String,
    pub curve: String,
    pub actor_sha256: String,
    pub final_mean_reward: f64,
}

impl Manifest {
    pub const FILE_NAME: &'static str = "manifest.toml";

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Report(format!("{}: {}", path.display(), e.message())))
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn checkpoint(role: NetRole, outcome: &TrainOutcome, cfg: &LoadedConfig, seed: u64) -> Checkpoint {
    let net = match role {
        NetRole::Critic => outcome.critic.clone(),
        _ => outcome.actor.clone(),
    };
    let mut ck = Checkpoint::new(role, net);
    if role == NetRole::Actor {
        ck.action_heads = outcome.heads.clone();
    }
    ck.meta = TrainingMeta {
        seed,
        env_config_hash: cfg.hash.clone(),
        global_step: outcome.global_step,
        build: BUILD_ID.to_string(),
    };
    ck
}

/// Train one actor-critic per configured seed and write its checkpoints,
/// learning curve and the run manifest under the output directory.
pub fn cmd_train(cfg: &LoadedConfig) -> Result<Manifest> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let scenario = cfg.scenario();
    let mut runs = Vec::new();
    for &seed in &cfg.config.seeds {
        log::info!("training seed {seed}");
        let outcome = train(
            |_| CtfEnv::new(cfg.map.clone(), scenario),
            &cfg.config.ppo,
            &cfg.config.train,
            cfg.neuron,
            seed,
        )?;
        let dir = format!("seed_{seed}");
        fs::create_dir_all(cfg.out_dir.join(&dir)).map_err(|e| Error::io(cfg.out_dir.join(&dir), e))?;
        let actor = format!("{dir}/actor.toml");
        let critic = format!("{dir}/critic.toml");
        let curve = format!("{dir}/curve.tsv");

        let actor_text = checkpoint(NetRole::Actor, &outcome, cfg, seed).to_toml()?;
        write(&cfg.out_dir.join(&actor), &actor_text)?;
        write(
            &cfg.out_dir.join(&critic),
            &checkpoint(NetRole::Critic, &outcome, cfg, seed).to_toml()?,
        )?;
        let curve_file = CurveFile {
            config_hash: cfg.hash.clone(),
            seed,
            points: outcome.curve.clone(),
        };
        write(&cfg.out_dir.join(&curve), &curve_file.to_text())?;

        runs.push(ManifestEntry {
            seed,
            global_step: outcome.global_step,
            actor,
            critic,
            curve,
            actor_sha256: Sha256::digest(actor_text.as_bytes())
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect(),
            final_mean_reward: outcome.curve.last().map_or(f64::NAN, |p| p.mean_reward),
        });
    }
    let manifest = Manifest {
        config_hash: cfg.hash.clone(),
        build: BUILD_ID.to_string(),
        runs,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Report(e.to_string()))?;
    write(&cfg.out_dir.join(Manifest::FILE_NAME), &text)?;
    Ok(manifest)
}
