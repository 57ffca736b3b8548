//! Proximal policy optimization with the clipped surrogate objective.
//!
//! Advantages use GAE(λ) normalized per update batch. Joint actions are
//! factored into independent categorical heads that share the actor's output
//! layer; heads of eliminated agents are masked out.

mod adam;
mod buffer;
mod env;
pub mod policy;
mod train;
mod update;

use serde::{Deserialize, Serialize};

pub use adam::Adam;
pub use buffer::{compute_advantages, gae, normalize, Boundary, RolloutBuffer, Step};
pub use env::{Environment, Transition};
pub use policy::{greedy_action, sample_action};
pub use train::{collect_rollout, evaluate_greedy, init_networks, train, CurvePoint, TrainOutcome, TrainSettings};
pub use update::{clipped_surrogate, max_ratio_deviation, ppo_update, Optimizers, UpdateStats};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub clip_epsilon: f64,
    pub discount: f64,
    pub gae_lambda: f64,
    pub learning_rate: f64,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    pub steps_per_update: usize,
    pub entropy_coefficient: f64,
    pub value_loss_coefficient: f64,
    pub max_grad_norm: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip_epsilon: 0.2,
            discount: 0.99,
            gae_lambda: 0.95,
            learning_rate: 3e-4,
            epochs_per_update: 4,
            minibatch_size: 256,
            steps_per_update: 4096,
            entropy_coefficient: 0.01,
            value_loss_coefficient: 0.5,
            max_grad_norm: 0.5,
        }
    }
}

impl PpoConfig {
    /// Every violated constraint, in field order.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                out.push(msg.to_string());
            }
        };
        need(
            self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0,
            "clip_epsilon must lie in (0, 1)",
        );
        need(
            self.discount > 0.0 && self.discount <= 1.0,
            "discount must lie in (0, 1]",
        );
        need(
            self.gae_lambda > 0.0 && self.gae_lambda <= 1.0,
            "gae_lambda must lie in (0, 1]",
        );
        need(
            self.learning_rate > 0.0 && self.learning_rate.is_finite(),
            "learning_rate must be positive",
        );
        need(self.epochs_per_update > 0, "epochs_per_update must be at least 1");
        need(self.minibatch_size > 0, "minibatch_size must be at least 1");
        need(self.steps_per_update > 0, "steps_per_update must be at least 1");
        need(
            self.entropy_coefficient >= 0.0 && self.entropy_coefficient.is_finite(),
            "entropy_coefficient must be non-negative",
        );
        need(
            self.value_loss_coefficient >= 0.0 && self.value_loss_coefficient.is_finite(),
            "value_loss_coefficient must be non-negative",
        );
        need(self.max_grad_norm > 0.0, "max_grad_norm must be positive");
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidPpoConfig(problems.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert!(PpoConfig::default().validate().is_ok());
    }

    #[test]
    fn every_problem_is_listed() {
        let cfg = PpoConfig {
            clip_epsilon: 1.5,
            discount: 0.0,
            minibatch_size: 0,
            ..PpoConfig::default()
        };
        assert_eq!(cfg.problems().len(), 3);
        assert!(cfg.validate().is_err());
    }
}
