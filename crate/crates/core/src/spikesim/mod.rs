//! Discrete-time spiking execution of a trained actor.
//!
//! Hidden soft-LIF units become leaky integrate-and-fire neurons simulated
//! with forward Euler. Rates are read out by counting spikes over a fixed
//! window and the linear output layer is applied to the decoded rates.
//!
//! The activity scale `s` speeds up the neuron clock: every neuron runs the
//! same dynamics as the rate model in its own time units, but one simulator
//! step of length `dt` advances that clock by `s * dt`. A unit whose model
//! rate is `r` therefore fires at `s * r` per unit of simulator time, and the
//! decoder divides counts by `s` again. Scaling time rather than currents
//! keeps the firing threshold where training put it.
//!
//! Spikes reach the next layer as unit-area current pulses. With
//! `synapse_tau > 0` each pulse is spread by a first-order synaptic filter of
//! that time constant (in neuron time), so downstream neurons see a smooth
//! current with the same mean. With `synapse_tau = 0` a pulse of weight `w`
//! is a voltage jump of `w / c_m`; large jumps overshoot the threshold and the
//! excess is lost at reset, which biases deeper layers low.

mod quant;

pub use quant::{quantize, QuantSpec};

use crate::error::{Error, Result};
use crate::net::{Activation, Dense, DenseNet};
use crate::neuron::NeuronParams;
use crate::ppo::greedy_action;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_WINDOW: u32 = 200;

/// Simulation settings fixed at conversion time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikingConfig {
    pub dt: f64,
    pub window_steps: u32,
    pub activity_scale: f64,
    pub quant: Option<QuantSpec>,
    /// Synaptic time constant in neuron time units; 0 delivers raw pulses.
    pub synapse_tau: f64,
}

impl Default for SpikingConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            window_steps: DEFAULT_WINDOW,
            activity_scale: 1.0,
            quant: None,
            synapse_tau: 0.0,
        }
    }
}

impl SpikingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidSpiking(format!("dt must be positive, got {}", self.dt)));
        }
        if self.window_steps == 0 {
            return Err(Error::InvalidSpiking("window_steps must be at least 1".into()));
        }
        if !(self.activity_scale.is_finite() && self.activity_scale > 0.0) {
            return Err(Error::InvalidSpiking(format!(
                "activity_scale must be positive, got {}",
                self.activity_scale
            )));
        }
        if !(self.synapse_tau.is_finite() && self.synapse_tau >= 0.0) {
            return Err(Error::InvalidSpiking(format!(
                "synapse_tau must be non-negative, got {}",
                self.synapse_tau
            )));
        }
        Ok(())
    }
}

/// One layer of LIF neurons.
#[derive(Debug, Clone)]
struct Population {
    v: Vec<f64>,
    refractory: Vec<u32>,
    counts: Vec<u32>,
    spikes: Vec<bool>,
    /// Filtered synaptic current.
    syn: Vec<f64>,
}

impl Population {
    fn new(n: usize, v0: f64) -> Self {
        Self {
            syn: vec![0.0; n],
            v: vec![v0; n],
            refractory: vec![0; n],
            counts: vec![0; n],
            spikes: vec![false; n],
        }
    }

    fn reset(&mut self, v0: f64) {
        self.v.fill(v0);
        self.refractory.fill(0);
        self.counts.fill(0);
        self.spikes.fill(false);
        self.syn.fill(0.0);
    }

    /// One Euler step of length `h`: `current` is a constant drive and
    /// `pulse` the summed weights of incoming unit-area spikes. `decay` is
    /// the per-step synaptic decay; 0 applies each pulse as a voltage jump.
    fn advance(&mut self, p: &NeuronParams, h: f64, hold: u32, current: &[f64], pulse: Option<&[f64]>, decay: f64) {
        let (c_m, tau_m, v_0, v_reset, v_th) = (p.c_m(), p.tau_m(), p.v_0(), p.v_reset(), p.v_th());
        for k in 0..self.v.len() {
            self.spikes[k] = false;
            let mut jump = 0.0;
            if let Some(pulse) = pulse {
                if decay > 0.0 {
                    // Exact unit area: the current sums to pulse / h over all later steps.
                    self.syn[k] = self.syn[k] * decay + pulse[k] * (1.0 - decay) / h;
                } else {
                    jump = pulse[k] / c_m;
                }
            }
            if self.refractory[k] > 0 {
                self.refractory[k] -= 1;
                continue;
            }
            let mut v = self.v[k] + h * (-(self.v[k] - v_0) / tau_m + (current[k] + self.syn[k]) / c_m) + jump;
            if v >= v_th {
                self.spikes[k] = true;
                self.counts[k] += 1;
                v = v_reset;
                self.refractory[k] = hold;
            }
            self.v[k] = v.max(v_reset);
            debug_assert!(self.v[k] >= v_reset && self.v[k] < v_th);
        }
    }
}

/// Spike rate of one neuron under constant current, per unit of simulated time.
pub fn empirical_rate(params: &NeuronParams, current: f64, dt: f64, steps: u32) -> f64 {
    let mut pop = Population::new(1, params.v_0());
    let hold = (params.tau_ref() / dt).ceil() as u32;
    for _ in 0..steps {
        pop.advance(params, dt, hold, &[current], None, 0.0);
    }
    pop.counts[0] as f64 / (steps as f64 * dt)
}

/// A converted actor: spiking hidden layers plus an affine rate readout.
#[derive(Debug, Clone)]
pub struct SpikingNet {
    params: NeuronParams,
    config: SpikingConfig,
    /// Input-side layer, row-major like [`Dense`].
    input: Dense,
    /// Hidden-to-hidden layers stored input-major so a presynaptic spike adds one contiguous row.
    recurrent_t: Vec<(Vec<f64>, Vec<f64>, usize)>,
    readout: Dense,
    hidden: Vec<Dense>,
    pops: Vec<Population>,
    drive: Vec<f64>,
    pulse: Vec<f64>,
}

impl SpikingNet {
    /// Transplant an actor's weights. Hidden-layer weights are quantized
    /// when `config.quant` is set; biases and the readout stay in floating point.
    pub fn convert(actor: &DenseNet, config: SpikingConfig) -> Result<Self> {
        config.validate()?;
        if actor.hidden_activation() != Activation::SoftRellif {
            return Err(Error::IncompatibleNetwork(format!(
                "hidden activation must be soft_rellif, found {:?}",
                actor.hidden_activation()
            )));
        }
        if actor.output_activation() != Activation::Identity {
            return Err(Error::IncompatibleNetwork("output layer must be linear".into()));
        }
        let layers = actor.layers();
        if layers.len() < 2 {
            return Err(Error::IncompatibleNetwork(
                "network has no hidden layer to convert".into(),
            ));
        }
        let mut hidden: Vec<Dense> = layers[..layers.len() - 1].to_vec();
        if let Some(spec) = config.quant {
            for layer in &mut hidden {
                let q = quantize(layer.weights(), spec);
                layer.weights_mut().copy_from_slice(&q);
            }
        }
        let recurrent_t = hidden[1..]
            .iter()
            .map(|l| {
                let mut t = vec![0.0; l.weights().len()];
                for r in 0..l.outputs() {
                    for c in 0..l.inputs() {
                        t[c * l.outputs() + r] = l.weight(r, c);
                    }
                }
                (t, l.biases().to_vec(), l.outputs())
            })
            .collect();
        let params = *actor.neuron_params();
        let pops = hidden
            .iter()
            .map(|l| Population::new(l.outputs(), params.v_0()))
            .collect();
        Ok(Self {
            params,
            config,
            input: hidden[0].clone(),
            recurrent_t,
            readout: layers[layers.len() - 1].clone(),
            hidden,
            pops,
            drive: Vec::new(),
            pulse: Vec::new(),
        })
    }

    pub fn config(&self) -> &SpikingConfig {
        &self.config
    }

    pub fn neuron_params(&self) -> &NeuronParams {
        &self.params
    }

    /// Hidden layers as simulated (quantized if requested).
    pub fn hidden_layers(&self) -> &[Dense] {
        &self.hidden
    }

    pub fn readout(&self) -> &Dense {
        &self.readout
    }

    pub fn set_window(&mut self, window_steps: u32) -> Result<()> {
        let mut c = self.config;
        c.window_steps = window_steps;
        c.validate()?;
        self.config = c;
        Ok(())
    }

    /// Membranes to rest, counters and refractory holds cleared.
    pub fn reset(&mut self) {
        let v0 = self.params.v_0();
        for pop in &mut self.pops {
            pop.reset(v0);
        }
    }

    fn clock(&self) -> (f64, u32, f64) {
        let h = self.config.dt * self.config.activity_scale;
        let decay = if self.config.synapse_tau > 0.0 {
            (-h / self.config.synapse_tau).exp()
        } else {
            0.0
        };
        (h, (self.params.tau_ref() / h).ceil() as u32, decay)
    }

    fn step_inner(&mut self, input_currents: &[f64]) {
        let (h, hold, decay) = self.clock();
        self.pops[0].advance(&self.params, h, hold, input_currents, None, decay);
        for k in 1..self.pops.len() {
            let (wt, bias, n_out) = &self.recurrent_t[k - 1];
            self.pulse.clear();
            self.pulse.resize(*n_out, 0.0);
            for (j, &fired) in self.pops[k - 1].spikes.iter().enumerate() {
                if fired {
                    for (p, w) in self.pulse.iter_mut().zip(&wt[j * n_out..(j + 1) * n_out]) {
                        *p += w;
                    }
                }
            }
            let pulse = std::mem::take(&mut self.pulse);
            self.pops[k].advance(&self.params, h, hold, bias, Some(&pulse), decay);
            self.pulse = pulse;
        }
    }

    /// Advance every hidden layer by one step. `input_currents` drives the
    /// first hidden layer (already including its bias); returns the spike
    /// indicators of each hidden layer.
    pub fn step(&mut self, input_currents: &[f64]) -> Result<Vec<Vec<bool>>> {
        if input_currents.len() != self.pops[0].v.len() {
            return Err(Error::DimensionMismatch {
                expected: self.pops[0].v.len(),
                got: input_currents.len(),
            });
        }
        self.step_inner(input_currents);
        Ok(self.pops.iter().map(|p| p.spikes.clone()).collect())
    }

    /// Spike counts since the last reset, per hidden layer.
    pub fn counts(&self) -> Vec<Vec<u32>> {
        self.pops.iter().map(|p| p.counts.clone()).collect()
    }

    pub fn membranes(&self) -> Vec<Vec<f64>> {
        self.pops.iter().map(|p| p.v.clone()).collect()
    }

    /// Decoded rates of the last hidden layer, in rate-model units.
    pub fn decoded_rates(&self) -> Vec<f64> {
        let denom = self.config.window_steps as f64 * self.config.dt * self.config.activity_scale;
        self.pops
            .last()
            .unwrap()
            .counts
            .iter()
            .map(|&c| c as f64 / denom)
            .collect()
    }

    /// Reset, run one window on `obs`, decode rates and apply the readout.
    pub fn infer(&mut self, obs: &[f64]) -> Result<Vec<f64>> {
        if obs.len() != self.input.inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.input.inputs(),
                got: obs.len(),
            });
        }
        self.reset();
        let mut drive = std::mem::take(&mut self.drive);
        self.input.affine_into(obs, &mut drive);
        for _ in 0..self.config.window_steps {
            self.step_inner(&drive);
        }
        self.drive = drive;
        Ok(self.readout.affine(&self.decoded_rates()))
    }
}

/// Result of [`calibrate_activity_scale`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub scale: f64,
    /// 99th percentile of the pooled hidden activations.
    pub p99: f64,
    /// Every sampled activation was zero; the scale fell back to 1.
    pub all_zero: bool,
}

/// Choose `s` so the 99th-percentile hidden rate maps to `target_max_rate`
/// spikes per unit of simulator time.
pub fn calibrate_activity_scale(
    actor: &DenseNet,
    observations: &[Vec<f64>],
    target_max_rate: f64,
) -> Result<Calibration> {
    if observations.is_empty() {
        return Err(Error::InvalidSpiking(
            "calibration needs at least one observation".into(),
        ));
    }
    if !(target_max_rate.is_finite() && target_max_rate > 0.0) {
        return Err(Error::InvalidSpiking("target_max_rate must be positive".into()));
    }
    let mut pooled = Vec::new();
    for obs in observations {
        for layer in actor.hidden_activations(obs)? {
            pooled.extend(layer);
        }
    }
    pooled.sort_by(f64::total_cmp);
    let rank = ((0.99 * pooled.len() as f64).ceil() as usize).clamp(1, pooled.len());
    let p99 = pooled[rank - 1];
    if p99 <= 0.0 {
        let all_zero = pooled.iter().all(|&a| a == 0.0);
        let max = *pooled.last().unwrap();
        if all_zero || max <= 0.0 {
            log::warn!("all sampled hidden activations are zero; using activity scale 1");
            return Ok(Calibration {
                scale: 1.0,
                p99,
                all_zero: true,
            });
        }
        return Ok(Calibration {
            scale: target_max_rate / max,
            p99,
            all_zero: false,
        });
    }
    Ok(Calibration {
        scale: target_max_rate / p99,
        p99,
        all_zero: false,
    })
}

/// One row of a rate-versus-spike agreement audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgreementRow {
    pub observations: usize,
    pub window_steps: u32,
    pub dt: f64,
    pub quant_bits: Option<u32>,
    pub agreement: f64,
    pub mean_abs_logit_error: f64,
}

/// Fraction of observations on which the spiking and rate actors pick the
/// same greedy joint action, and the mean absolute logit difference.
pub fn agreement(
    actor: &DenseNet,
    snet: &mut SpikingNet,
    heads: &[usize],
    observations: &[Vec<f64>],
) -> Result<AgreementRow> {
    if observations.is_empty() {
        return Err(Error::InvalidSpiking("agreement needs at least one observation".into()));
    }
    let mut same = 0usize;
    let mut err = 0.0;
    let mut n_logits = 0usize;
    for obs in observations {
        let rate = actor.predict(obs)?;
        let spike = snet.infer(obs)?;
        if greedy_action(&rate, heads) == greedy_action(&spike, heads) {
            same += 1;
        }
        err += rate.iter().zip(&spike).map(|(a, b)| (a - b).abs()).sum::<f64>();
        n_logits += rate.len();
    }
    let c = snet.config();
    Ok(AgreementRow {
        observations: observations.len(),
        window_steps: c.window_steps,
        dt: c.dt,
        quant_bits: c.quant.map(|q| q.bits()),
        agreement: same as f64 / observations.len() as f64,
        mean_abs_logit_error: err / n_logits as f64,
    })
}

/// Aligned text table, rows sorted by window then precision (float first).
pub fn format_agreement_table(rows: &[AgreementRow]) -> String {
    let mut rows = rows.to_vec();
    rows.sort_by_key(|r| (r.window_steps, std::cmp::Reverse(r.quant_bits.unwrap_or(u32::MAX))));
    let mut out = format!(
        "{:>8} {:>8} {:>10} {:>6} {:>11} {:>15}\n",
        "obs", "window", "dt", "bits", "agreement%", "mean|dlogit|"
    );
    for r in rows {
        let bits = r.quant_bits.map_or("float".to_string(), |b| b.to_string());
        out.push_str(&format!(
            "{:>8} {:>8} {:>10.2e} {:>6} {:>11.2} {:>15.6}\n",
            r.observations,
            r.window_steps,
            r.dt,
            bits,
            100.0 * r.agreement,
            r.mean_abs_logit_error
        ));
    }
    out
}
