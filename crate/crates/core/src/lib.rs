//! Train a rate-based LIF actor-critic with PPO, then run the actor as a
//! discrete-time spiking network.
//!
//! The pipeline has five parts:
//!
//! - [`neuron`]: closed-form LIF rate curves and the soft, ReLU-like variant.
//! - [`net`]: dense actor/critic networks with soft-LIF hidden units,
//!   exact reverse-mode gradients, and text checkpoints.
//! - [`ppo`]: clipped-surrogate PPO with GAE over a generic [`ppo::Environment`].
//! - [`spikesim`]: weight transplant into spiking LIF layers, rate decoding,
//!   weight quantization, and activity rescaling.
//! - [`ctf`]: the capture-the-flag gridworld used for training and evaluation.
//!
//! [`harness`] ties them together behind the `spiking-actor` command line tool.

pub mod ctf;
pub mod error;
pub mod harness;
pub mod net;
pub mod neuron;
pub mod ppo;
pub mod spikesim;

pub use error::{Error, Result};
