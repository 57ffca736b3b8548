use crate::error::Result;

/// Outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// The episode ended in a true terminal state; its value is zero.
    pub terminated: bool,
    /// The episode was cut off by a time limit; bootstrap from the critic.
    pub truncated: bool,
}

impl Transition {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// Discrete-action environment with one categorical head per controlled agent.
pub trait Environment: Send {
    fn observation_dim(&self) -> usize;

    /// Number of choices for each head.
    fn action_heads(&self) -> &[usize];

    /// Start a new episode; returns the first observation.
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>>;

    /// Heads whose agents still act. Inactive heads are ignored by `step`
    /// and contribute nothing to log-probabilities or entropy.
    fn active_heads(&self) -> Vec<bool> {
        vec![true; self.action_heads().len()]
    }

    /// Apply one action index per head.
    fn step(&mut self, actions: &[usize]) -> Result<Transition>;
}
