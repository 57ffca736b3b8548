//! Closed-form firing rates of the leaky integrate-and-fire neuron.
//!
//! Three transfer curves are provided, all mapping a constant input current
//! to a steady-state firing rate:
//!
//! - [`rate_hard`]: the exact LIF rate. Zero up to the threshold current,
//!   with an unbounded derivative just above it.
//! - [`rate_soft`]: the same curve with the threshold kink replaced by a
//!   softplus of width `gamma`. Differentiable everywhere.
//! - With the default constants (`c_m = tau_m = v_th = 1`, `v_0 = v_reset =
//!   tau_ref = 0`) the soft curve behaves like `relu(i - 1) + 0.5` above
//!   threshold. This is the "soft-ReLLIF" activation used by [`crate::net`].
//!
//! All soft-curve quantities are evaluated in the log domain, so the rate
//! stays strictly positive (and the gradient finite) for arbitrarily negative
//! currents instead of underflowing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw LIF constants as they appear in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifConstants {
    pub c_m: f64,
    pub tau_m: f64,
    pub v_0: f64,
    pub v_reset: f64,
    pub v_th: f64,
    pub tau_ref: f64,
    pub gamma: f64,
}

impl Default for LifConstants {
    fn default() -> Self {
        Self {
            c_m: 1.0,
            tau_m: 1.0,
            v_0: 0.0,
            v_reset: 0.0,
            v_th: 1.0,
            tau_ref: 0.0,
            gamma: 0.003,
        }
    }
}

/// Validated LIF constants shared by the rate model and the spiking simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LifConstants", into = "LifConstants")]
pub struct NeuronParams {
    c_m: f64,
    tau_m: f64,
    v_0: f64,
    v_reset: f64,
    v_th: f64,
    tau_ref: f64,
    gamma: f64,
}

impl NeuronParams {
    pub fn new(k: LifConstants) -> Result<Self> {
        let all = [k.c_m, k.tau_m, k.v_0, k.v_reset, k.v_th, k.tau_ref, k.gamma];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidNeuronParams("all constants must be finite".into()));
        }
        let mut problems = Vec::new();
        if k.c_m <= 0.0 {
            problems.push("c_m must be > 0");
        }
        if k.tau_m <= 0.0 {
            problems.push("tau_m must be > 0");
        }
        if k.gamma <= 0.0 {
            problems.push("gamma must be > 0");
        }
        if k.tau_ref < 0.0 {
            problems.push("tau_ref must be >= 0");
        }
        if k.v_th <= k.v_reset {
            problems.push("v_th must exceed v_reset");
        }
        if k.v_th <= k.v_0 {
            problems.push("v_th must exceed v_0 (the neuron would fire at zero input)");
        }
        if problems.is_empty() {
            Ok(Self {
                c_m: k.c_m,
                tau_m: k.tau_m,
                v_0: k.v_0,
                v_reset: k.v_reset,
                v_th: k.v_th,
                tau_ref: k.tau_ref,
                gamma: k.gamma,
            })
        } else {
            Err(Error::InvalidNeuronParams(problems.join("; ")))
        }
    }

    /// Defaults with a different softplus width.
    pub fn with_gamma(gamma: f64) -> Result<Self> {
        Self::new(LifConstants {
            gamma,
            ..LifConstants::default()
        })
    }

    pub fn constants(&self) -> LifConstants {
        LifConstants {
            c_m: self.c_m,
            tau_m: self.tau_m,
            v_0: self.v_0,
            v_reset: self.v_reset,
            v_th: self.v_th,
            tau_ref: self.tau_ref,
            gamma: self.gamma,
        }
    }

    pub fn c_m(&self) -> f64 {
        self.c_m
    }
    pub fn tau_m(&self) -> f64 {
        self.tau_m
    }
    pub fn v_0(&self) -> f64 {
        self.v_0
    }
    pub fn v_reset(&self) -> f64 {
        self.v_reset
    }
    pub fn v_th(&self) -> f64 {
        self.v_th
    }
    pub fn tau_ref(&self) -> f64 {
        self.tau_ref
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Numerator of the interspike log term, `(v_th - v_reset) * c_m / tau_m`.
    fn reset_gap_current(&self) -> f64 {
        (self.v_th - self.v_reset) * self.c_m / self.tau_m
    }
}

impl Default for NeuronParams {
    fn default() -> Self {
        Self::new(LifConstants::default()).expect("default constants are valid")
    }
}

impl TryFrom<LifConstants> for NeuronParams {
    type Error = Error;

    fn try_from(k: LifConstants) -> Result<Self> {
        Self::new(k)
    }
}

impl From<NeuronParams> for LifConstants {
    fn from(p: NeuronParams) -> Self {
        p.constants()
    }
}

/// Smallest constant current that makes the neuron fire.
pub fn i_threshold(p: &NeuronParams) -> f64 {
    (p.v_th - p.v_0) * p.c_m / p.tau_m
}

/// Exact steady-state LIF firing rate for a constant current.
pub fn rate_hard(p: &NeuronParams, i_s: f64) -> f64 {
    let excess = i_s - i_threshold(p);
    if excess <= 0.0 || excess.is_nan() {
        return 0.0;
    }
    // -ln(1 - a/b) rewritten as ln(1 + a/(b - a)); b - a is exactly the excess.
    let tau_spike = p.tau_m * (p.reset_gap_current() / excess).ln_1p();
    1.0 / (p.tau_ref + tau_spike)
}

/// `ln(1 + e^u)` without overflow.
fn softplus_unit(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

const SOFTPLUS_LINEAR_BRANCH: f64 = 30.0;

/// Softplus smoothing `gamma * ln(1 + e^(x / gamma))`.
pub fn softplus(x: f64, gamma: f64) -> f64 {
    let z = x / gamma;
    if z > SOFTPLUS_LINEAR_BRANCH {
        x + gamma * (-z).exp().ln_1p()
    } else {
        gamma * z.exp().ln_1p()
    }
}

/// Natural log of [`softplus`], finite for every finite `x`.
fn ln_softplus(x: f64, gamma: f64) -> f64 {
    let z = x / gamma;
    if z > SOFTPLUS_LINEAR_BRANCH {
        (x + gamma * (-z).exp().ln_1p()).ln()
    } else if z < -SOFTPLUS_LINEAR_BRANCH {
        // ln(gamma * ln1p(w)) with w = e^z tiny: ln(gamma) + z + ln(ln1p(w) / w)
        let w = z.exp();
        let correction = if w > 0.0 { (w.ln_1p() / w).ln() } else { 0.0 };
        gamma.ln() + z + correction
    } else {
        (gamma * z.exp().ln_1p()).ln()
    }
}

/// Soft-LIF rate and its derivative with respect to the input current.
pub fn rate_soft_with_grad(p: &NeuronParams, i_s: f64) -> (f64, f64) {
    let x = i_s - i_threshold(p);
    let ln_theta = ln_softplus(x, p.gamma);
    let u = p.reset_gap_current().ln() - ln_theta;
    let log_term = softplus_unit(u);
    let rate = 1.0 / (p.tau_ref + p.tau_m * log_term);
    // d(log_term)/d(i_s) = -sigmoid(u) * sigmoid(x/gamma) / theta
    let ln_sig_z = -softplus_unit(-x / p.gamma);
    let sig_over_theta = (ln_sig_z - ln_theta).exp();
    let grad = rate * rate * p.tau_m * sigmoid(u) * sig_over_theta;
    (rate, grad)
}

/// Smoothed LIF rate. Strictly positive and strictly increasing in `i_s`.
pub fn rate_soft(p: &NeuronParams, i_s: f64) -> f64 {
    let x = i_s - i_threshold(p);
    let u = p.reset_gap_current().ln() - ln_softplus(x, p.gamma);
    1.0 / (p.tau_ref + p.tau_m * softplus_unit(u))
}

/// Exact derivative of [`rate_soft`] with respect to the input current.
pub fn rate_soft_grad(p: &NeuronParams, i_s: f64) -> f64 {
    rate_soft_with_grad(p, i_s).1
}
