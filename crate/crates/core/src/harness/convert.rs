use super::config::LoadedConfig;
use super::eval::sample_observations;
use crate::error::{Error, Result};
use crate::net::checkpoint::{Checkpoint, NetRole, SpikingSettings};
use crate::net::DenseNet;
use crate::spikesim::{
    agreement, calibrate_activity_scale, AgreementRow, Calibration, QuantSpec, SpikingConfig, SpikingNet,
};

/// Seed for the observations used to calibrate the activity scale.
pub const CALIBRATION_SEED: u64 = 1;
/// Seed for the agreement audit set; disjoint from calibration.
pub const AUDIT_SEED: u64 = 2;

fn require_actor(ck: &Checkpoint) -> Result<()> {
    match ck.role {
        NetRole::Actor => Ok(()),
        NetRole::Critic => Err(Error::IncompatibleNetwork(
            "critic checkpoints cannot be converted; pass the actor checkpoint".into(),
        )),
        NetRole::SpikingActor => Err(Error::IncompatibleNetwork(
            "checkpoint is already a spiking actor; pass the rate actor it came from".into(),
        )),
    }
}

fn heads_of(ck: &Checkpoint) -> Vec<usize> {
    if ck.action_heads.is_empty() {
        vec![ck.net.output_dim()]
    } else {
        ck.action_heads.clone()
    }
}

fn check_hash(ck: &Checkpoint, cfg: &LoadedConfig) {
    if !ck.meta.env_config_hash.is_empty() && ck.meta.env_config_hash != cfg.hash {
        log::warn!(
            "checkpoint was trained on environment {} but the config describes {}",
            ck.meta.env_config_hash,
            cfg.hash
        );
    }
}

/// Activity scale for `actor` from observations it visits under the configured scenario.
pub fn calibrate(cfg: &LoadedConfig, actor: &DenseNet) -> Result<Calibration> {
    let s = &cfg.config.spiking;
    let obs = sample_observations(
        &cfg.map,
        cfg.scenario(),
        actor,
        s.calibration_observations,
        CALIBRATION_SEED,
    )?;
    let cal = calibrate_activity_scale(actor, &obs, s.target_max_rate)?;
    if cal.all_zero {
        log::warn!("calibration saw only silent hidden units; activity scale left at 1");
    }
    Ok(cal)
}

/// Spiking settings from the config, with the given scale.
pub fn spiking_config(cfg: &LoadedConfig, activity_scale: f64) -> Result<SpikingConfig> {
    let s = &cfg.config.spiking;
    let config = SpikingConfig {
        dt: s.dt,
        window_steps: s.window_steps,
        activity_scale,
        quant: s.quant_bits.map(QuantSpec::new).transpose()?,
        synapse_tau: s.synapse_tau,
    };
    config.validate()?;
    Ok(config)
}

/// Convert a rate actor into a spiking-actor checkpoint: calibrate the
/// activity scale, quantize hidden weights if configured, and record the
/// simulation settings alongside the weights.
pub fn cmd_convert(cfg: &LoadedConfig, actor: &Checkpoint) -> Result<Checkpoint> {
    require_actor(actor)?;
    check_hash(actor, cfg);
    let cal = calibrate(cfg, &actor.net)?;
    log::info!("activity scale {:.4} (p99 hidden rate {:.4})", cal.scale, cal.p99);
    let config = spiking_config(cfg, cal.scale)?;
    let snet = SpikingNet::convert(&actor.net, config)?;
    let mut layers = snet.hidden_layers().to_vec();
    layers.push(snet.readout().clone());
    let net = DenseNet::from_parts(
        layers,
        actor.net.hidden_activation(),
        actor.net.output_activation(),
        *actor.net.neuron_params(),
    )?;
    let mut out = Checkpoint::new(NetRole::SpikingActor, net);
    out.action_heads = heads_of(actor);
    out.activity_scale = cal.scale;
    out.meta = actor.meta.clone();
    out.spiking = Some(SpikingSettings {
        dt: config.dt,
        window_steps: config.window_steps,
        quant_bits: config.quant.map(|q| q.bits()),
        synapse_tau: config.synapse_tau,
    });
    Ok(out)
}

/// Rebuild the simulator stored in a spiking-actor checkpoint.
pub fn load_spiking(ck: &Checkpoint) -> Result<SpikingNet> {
    let settings = match (ck.role, ck.spiking) {
        (NetRole::SpikingActor, Some(s)) => s,
        _ => {
            return Err(Error::IncompatibleNetwork(
                "expected a spiking_actor checkpoint; run convert first".into(),
            ))
        }
    };
    // Stored weights already sit on the quantization grid, and quantizing is idempotent there.
    SpikingNet::convert(
        &ck.net,
        SpikingConfig {
            dt: settings.dt,
            window_steps: settings.window_steps,
            activity_scale: ck.activity_scale,
            quant: settings.quant_bits.map(QuantSpec::new).transpose()?,
            synapse_tau: settings.synapse_tau,
        },
    )
}

/// Spiking controller for `ck`: loaded as stored for a spiking actor,
/// converted in memory from the config for a rate actor.
pub fn spiking_net_for(cfg: &LoadedConfig, ck: &Checkpoint) -> Result<SpikingNet> {
    match ck.role {
        NetRole::SpikingActor => load_spiking(ck),
        _ => load_spiking(&cmd_convert(cfg, ck)?),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreeOptions {
    pub windows: Vec<u32>,
    /// `None` is the float row.
    pub quant_bits: Vec<Option<u32>>,
    pub dt: f64,
    pub observations: usize,
}

/// Agreement between the rate actor and its spiking conversion for every
/// (window, precision) pair, on one shared set of on-distribution observations.
pub fn cmd_agree(cfg: &LoadedConfig, actor: &Checkpoint, opts: &AgreeOptions) -> Result<Vec<AgreementRow>> {
    require_actor(actor)?;
    check_hash(actor, cfg);
    if opts.windows.is_empty() || opts.quant_bits.is_empty() || opts.observations == 0 {
        return Err(Error::InvalidConfig(vec![
            "agreement needs at least one window, one precision and one observation".into(),
        ]));
    }
    let heads = heads_of(actor);
    let cal = calibrate(cfg, &actor.net)?;
    let obs = sample_observations(&cfg.map, cfg.scenario(), &actor.net, opts.observations, AUDIT_SEED)?;
    let mut rows = Vec::new();
    for &window in &opts.windows {
        for &bits in &opts.quant_bits {
            let config = SpikingConfig {
                dt: opts.dt,
                window_steps: window,
                activity_scale: cal.scale,
                quant: bits.map(QuantSpec::new).transpose()?,
                synapse_tau: cfg.config.spiking.synapse_tau,
            };
            let mut snet = SpikingNet::convert(&actor.net, config)?;
            rows.push(agreement(&actor.net, &mut snet, &heads, &obs)?);
        }
    }
    rows.sort_by_key(|r| (r.window_steps, std::cmp::Reverse(r.quant_bits.unwrap_or(u32::MAX))));
    Ok(rows)
}
