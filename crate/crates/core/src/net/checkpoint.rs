//! Text checkpoints for trained and converted networks.
//!
//! A checkpoint is a single TOML document:
//!
//! ```toml
//! format_version = 1
//! role = "actor"                  # actor | critic | spiking_actor
//! layer_dims = [10, 64, 64, 5]
//! hidden_activation = "soft_rellif"
//! output_activation = "identity"
//! action_heads = [5]              # actor only: logits split per controlled agent
//! activity_scale = 1.0
//!
//! [neuron]                        # LIF constants, all seven keys required
//! c_m = 1.0
//! # ...
//!
//! [meta]
//! seed = 7
//! env_config_hash = "3f2a..."
//! global_step = 500000
//! build = "spiking-actor 0.1.0"
//!
//! [spiking]                       # spiking_actor only
//! dt = 0.001
//! window_steps = 200
//! quant_bits = 8                  # omitted for float weights
//! synapse_tau = 1.0
//!
//! [[layers]]                      # one table per affine layer, input side first
//! weights = [...]                 # row-major, outputs x inputs
//! biases = [...]
//! ```
//!
//! Floats are written in shortest round-trip decimal form, so a saved network
//! loads back bit-for-bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Activation, Dense, DenseNet};
use crate::error::{Error, Result};
use crate::neuron::NeuronParams;

pub const FORMAT_VERSION: i64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetRole {
    Actor,
    Critic,
    SpikingActor,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingMeta {
    pub seed: u64,
    pub env_config_hash: String,
    pub global_step: u64,
    pub build: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpikingSettings {
    pub dt: f64,
    pub window_steps: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quant_bits: Option<u32>,
    /// Synaptic filter time constant; 0 means raw pulses.
    #[serde(default)]
    pub synapse_tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub role: NetRole,
    pub net: DenseNet,
    pub action_heads: Vec<usize>,
    pub activity_scale: f64,
    pub meta: TrainingMeta,
    pub spiking: Option<SpikingSettings>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format_version: i64,
    role: NetRole,
    layer_dims: Vec<usize>,
    hidden_activation: Activation,
    output_activation: Activation,
    #[serde(default)]
    action_heads: Vec<usize>,
    activity_scale: f64,
    neuron: NeuronParams,
    meta: TrainingMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spiking: Option<SpikingSettings>,
    layers: Vec<LayerFile>,
}

impl Checkpoint {
    pub fn new(role: NetRole, net: DenseNet) -> Self {
        Self {
            role,
            net,
            action_heads: Vec::new(),
            activity_scale: 1.0,
            meta: TrainingMeta::default(),
            spiking: None,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        let net = &self.net;
        let file = CheckpointFile {
            format_version: FORMAT_VERSION,
            role: self.role,
            layer_dims: net.dims().to_vec(),
            hidden_activation: net.hidden_activation(),
            output_activation: net.output_activation(),
            action_heads: self.action_heads.clone(),
            activity_scale: self.activity_scale,
            neuron: *net.neuron_params(),
            meta: self.meta.clone(),
            spiking: self.spiking,
            layers: net
                .layers()
                .iter()
                .map(|l| LayerFile {
                    weights: l.weights().to_vec(),
                    biases: l.biases().to_vec(),
                })
                .collect(),
        };
        toml::to_string(&file).map_err(|e| Error::CheckpointParse(format!("serialize: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::CheckpointParse(e.message().to_string()))?;
        let version = table
            .get("format_version")
            .ok_or_else(|| Error::CheckpointParse("missing format_version".into()))?
            .as_integer()
            .ok_or_else(|| Error::CheckpointParse("format_version must be an integer".into()))?;
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        let file: CheckpointFile = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::CheckpointParse(e.message().to_string()))?;

        if file.layers.len() + 1 != file.layer_dims.len() {
            return Err(Error::CheckpointParse(format!(
                "layer_dims {:?} describe {} layers but {} are present",
                file.layer_dims,
                file.layer_dims.len().saturating_sub(1),
                file.layers.len()
            )));
        }
        let layers = file
            .layers
            .into_iter()
            .zip(file.layer_dims.windows(2))
            .enumerate()
            .map(|(k, (l, w))| {
                Dense::from_parts(w[0], w[1], l.weights, l.biases)
                    .map_err(|e| Error::CheckpointParse(format!("layer {k}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let net = DenseNet::from_parts(layers, file.hidden_activation, file.output_activation, file.neuron)?;

        if !(file.activity_scale.is_finite() && file.activity_scale > 0.0) {
            return Err(Error::CheckpointParse("activity_scale must be positive".into()));
        }
        if !file.action_heads.is_empty() && file.action_heads.iter().sum::<usize>() != net.output_dim() {
            return Err(Error::CheckpointParse(format!(
                "action_heads {:?} do not cover {} outputs",
                file.action_heads,
                net.output_dim()
            )));
        }
        if (file.role == NetRole::SpikingActor) != file.spiking.is_some() {
            return Err(Error::CheckpointParse(
                "a [spiking] table is required for, and only allowed on, spiking_actor checkpoints".into(),
            ));
        }
        Ok(Self {
            role: file.role,
            net,
            action_heads: file.action_heads,
            activity_scale: file.activity_scale,
            meta: file.meta,
            spiking: file.spiking,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}
