use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ctf::map::DEFAULT_BORDER_BAND;
use crate::ctf::red::DEFAULT_PATROL_RADIUS;
use crate::ctf::{CombatTable, GameRules, MapSpec, RedKind, Scenario};
use crate::error::{Error, Result};
use crate::neuron::{LifConstants, NeuronParams};
use crate::ppo::{PpoConfig, TrainSettings};
use crate::spikesim::QuantSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    /// Map file; relative paths resolve against the config file. Omit for the bundled map.
    pub map: Option<PathBuf>,
    pub border_band: u32,
    pub n_blue: usize,
    pub n_red: usize,
    pub red_policy: RedKind,
    pub patrol_radius: u32,
    pub max_steps: u32,
    pub step_penalty: f64,
    pub combat: CombatTable,
}

impl Default for EnvSection {
    fn default() -> Self {
        Self {
            map: None,
            border_band: DEFAULT_BORDER_BAND,
            n_blue: 1,
            n_red: 1,
            red_policy: RedKind::RandomWalk,
            patrol_radius: DEFAULT_PATROL_RADIUS,
            max_steps: 150,
            step_penalty: 0.001,
            combat: CombatTable::default(),
        }
    }
}

impl EnvSection {
    pub fn scenario(&self) -> Scenario {
        Scenario {
            n_blue: self.n_blue,
            n_red: self.n_red,
            red_policy: self.red_policy,
            patrol_radius: self.patrol_radius,
            rules: GameRules {
                max_steps: self.max_steps,
                step_penalty: self.step_penalty,
                combat: self.combat,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpikingSection {
    pub dt: f64,
    pub window_steps: u32,
    pub quant_bits: Option<u32>,
    /// Simulator firing rate assigned to the 99th-percentile hidden activation.
    pub target_max_rate: f64,
    pub calibration_observations: usize,
    /// Synaptic filter time constant in neuron time units; 0 delivers raw pulses.
    pub synapse_tau: f64,
}

impl Default for SpikingSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            window_steps: 200,
            quant_bits: None,
            target_max_rate: 300.0,
            calibration_observations: 1000,
            synapse_tau: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub episodes: usize,
    pub master_seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            episodes: 1000,
            master_seed: 20_240_101,
        }
    }
}

/// Everything one experiment needs. See `configs/` for annotated examples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub env: EnvSection,
    #[serde(default)]
    pub ppo: PpoConfig,
    #[serde(default)]
    pub train: TrainSettings,
    #[serde(default)]
    pub neuron: LifConstants,
    #[serde(default)]
    pub spiking: SpikingSection,
    #[serde(default)]
    pub eval: EvalSection,
}

/// A validated configuration with its map loaded and paths resolved.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub map: Arc<MapSpec>,
    pub neuron: NeuronParams,
    pub out_dir: PathBuf,
    pub hash: String,
}

impl LoadedConfig {
    pub fn scenario(&self) -> Scenario {
        self.config.env.scenario()
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(vec![e.message().to_string()]))
    }

    /// Read, resolve and validate; every problem found is reported at once.
    pub fn load(path: impl AsRef<Path>) -> Result<LoadedConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text)?.resolve(base)
    }

    /// Validate against `base` for relative paths.
    pub fn resolve(self, base: &Path) -> Result<LoadedConfig> {
        let mut problems = Vec::new();
        if self.seeds.is_empty() {
            problems.push("seeds must not be empty".to_string());
        }
        let map = match &self.env.map {
            None => Some(MapSpec::default_map()),
            Some(p) => {
                let full = base.join(p);
                match MapSpec::load(&full) {
                    Ok(m) => Some(m),
                    Err(Error::Io { .. }) => {
                        problems.push(format!("map file {} does not exist or cannot be read", full.display()));
                        None
                    }
                    Err(e) => {
                        problems.push(format!("map file {}: {e}", full.display()));
                        None
                    }
                }
            }
        }
        .map(|m| m.with_border_band(self.env.border_band));
        if let Some(m) = &map {
            for (team, n) in [
                (crate::ctf::Team::Blue, self.env.n_blue),
                (crate::ctf::Team::Red, self.env.n_red),
            ] {
                if n == 0 {
                    problems.push(format!("n_{} must be at least 1", team.name()));
                } else if n > m.spawn_zone(team).len() {
                    problems.push(format!(
                        "{} spawn zone holds {} cells but n_{} = {n}",
                        team.name(),
                        m.spawn_zone(team).len(),
                        team.name()
                    ));
                }
            }
        }
        if self.env.max_steps == 0 {
            problems.push("env.max_steps must be positive".into());
        }
        if !self.env.step_penalty.is_finite() {
            problems.push("env.step_penalty must be finite".into());
        }
        if let Err(Error::InvalidConfig(p)) = self.env.combat.validate() {
            problems.extend(p);
        }
        problems.extend(self.ppo.problems().into_iter().map(|p| format!("ppo: {p}")));
        problems.extend(self.train.problems().into_iter().map(|p| format!("train: {p}")));
        let neuron = match NeuronParams::new(self.neuron) {
            Ok(n) => Some(n),
            Err(e) => {
                problems.push(format!("neuron: {e}"));
                None
            }
        };
        let s = &self.spiking;
        if !(s.dt.is_finite() && s.dt > 0.0) {
            problems.push("spiking.dt must be positive".into());
        }
        if s.window_steps == 0 {
            problems.push("spiking.window_steps must be at least 1".into());
        }
        if let Some(bits) = s.quant_bits {
            if let Err(e) = QuantSpec::new(bits) {
                problems.push(format!("spiking: {e}"));
            }
        }
        if !(s.target_max_rate.is_finite() && s.target_max_rate > 0.0) {
            problems.push("spiking.target_max_rate must be positive".into());
        }
        if !(s.synapse_tau.is_finite() && s.synapse_tau >= 0.0) {
            problems.push("spiking.synapse_tau must be non-negative".into());
        }
        if s.calibration_observations == 0 {
            problems.push("spiking.calibration_observations must be at least 1".into());
        }
        if self.eval.episodes == 0 {
            problems.push("eval.episodes must be at least 1".into());
        }
        if !problems.is_empty() {
            return Err(Error::InvalidConfig(problems));
        }
        let map = map.expect("checked above");
        let hash = env_hash(&self.env, &map);
        let out_dir = base.join(&self.out_dir);
        Ok(LoadedConfig {
            neuron: neuron.expect("checked above"),
            map: Arc::new(map),
            out_dir,
            hash,
            config: self,
        })
    }
}

/// Fingerprint of the environment definition: the map contents (not its
/// path) plus every scenario setting.
pub fn env_hash(env: &EnvSection, map: &MapSpec) -> String {
    let mut canonical = env.clone();
    canonical.map = None;
    let mut h = Sha256::new();
    h.update(map.to_text().as_bytes());
    h.update(toml::to_string(&canonical).expect("env section serializes").as_bytes());
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "seeds = [1]\nout_dir = \"runs/x\"\n";

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        let loaded = cfg.resolve(Path::new("/tmp")).unwrap();
        assert_eq!(loaded.config.env.n_blue, 1);
        assert_eq!(loaded.config.ppo, PpoConfig::default());
        assert_eq!(loaded.hash.len(), 16);
    }

    #[test]
    fn all_problems_reported() {
        let text = "seeds = []\nout_dir = \"x\"\n[env]\nmap = \"nope.txt\"\n[ppo]\nclip_epsilon = 2.0\n[spiking]\nwindow_steps = 0\n";
        match RunConfig::parse(text).unwrap().resolve(Path::new("/nonexistent")) {
            Err(Error::InvalidConfig(p)) => {
                assert!(p.iter().any(|m| m.contains("seeds")));
                assert!(p.iter().any(|m| m.contains("nope.txt")));
                assert!(p.iter().any(|m| m.contains("clip_epsilon")));
                assert!(p.iter().any(|m| m.contains("window_steps")));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("seeds = [1]\nout_dir = \"x\"\n[env]\nbogus = 1\n").is_err());
    }

    #[test]
    fn hash_tracks_environment_only() {
        let a = RunConfig::parse(MINIMAL).unwrap().resolve(Path::new("/tmp")).unwrap();
        let b = RunConfig::parse("seeds = [2, 3]\nout_dir = \"y\"\n[ppo]\nlearning_rate = 0.001\n")
            .unwrap()
            .resolve(Path::new("/tmp"))
            .unwrap();
        assert_eq!(a.hash, b.hash);
        let c = RunConfig::parse("seeds = [1]\nout_dir = \"x\"\n[env]\nn_red = 2\n")
            .unwrap()
            .resolve(Path::new("/tmp"))
            .unwrap();
        assert_ne!(a.hash, c.hash);
    }
}
