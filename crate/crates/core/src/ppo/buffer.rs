use crate::error::{Error, Result};

/// How the trajectory continues after a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// The next stored step follows this one in the same episode.
    Continue,
    /// True terminal state; the value after it is zero.
    Terminal,
    /// Episode cut short (time limit or end of the collection segment);
    /// the payload is the critic's value of the next observation.
    Truncated(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub observation: Vec<f64>,
    pub actions: Vec<usize>,
    pub active: Vec<bool>,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub boundary: Boundary,
}

/// Transitions of one collection phase, ordered so that each trajectory is a
/// contiguous run ending in a non-`Continue` boundary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBuffer {
    steps: Vec<Step>,
}

impl RolloutBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: Step) {
        self.steps.push(step);
    }

    pub fn extend(&mut self, other: RolloutBuffer) {
        self.steps.extend(other.steps);
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Every trajectory is closed, so advantages can be computed.
    pub fn is_complete(&self) -> bool {
        self.steps.last().is_some_and(|s| s.boundary != Boundary::Continue)
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }
}

/// Generalized advantage estimates (unnormalized), walking backwards.
pub fn gae(rewards: &[f64], values: &[f64], boundaries: &[Boundary], discount: f64, lambda: f64) -> Vec<f64> {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let (next_value, carry) = match boundaries[t] {
            Boundary::Continue => (values.get(t + 1).copied().unwrap_or(0.0), true),
            Boundary::Terminal => (0.0, false),
            Boundary::Truncated(v) => (v, false),
        };
        if !carry {
            running = 0.0;
        }
        let delta = rewards[t] + discount * next_value - values[t];
        running = delta + discount * lambda * running;
        adv[t] = running;
    }
    adv
}

/// Advantages (normalized to zero mean and unit variance when there is more
/// than one step) and value targets (unnormalized advantage plus value).
pub fn compute_advantages(buffer: &RolloutBuffer, discount: f64, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    if !buffer.is_complete() {
        return Err(Error::InvalidPpoConfig("rollout ends inside an open trajectory".into()));
    }
    let steps = buffer.steps();
    let rewards: Vec<f64> = steps.iter().map(|s| s.reward).collect();
    let values: Vec<f64> = steps.iter().map(|s| s.value).collect();
    let bounds: Vec<Boundary> = steps.iter().map(|s| s.boundary).collect();
    let raw = gae(&rewards, &values, &bounds, discount, lambda);
    let returns: Vec<f64> = raw.iter().zip(&values).map(|(a, v)| a + v).collect();
    Ok((normalize(&raw), returns))
}

pub fn normalize(xs: &[f64]) -> Vec<f64> {
    if xs.len() < 2 {
        return xs.to_vec();
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-12 {
        return xs.iter().map(|x| x - mean).collect();
    }
    xs.iter().map(|x| (x - mean) / std).collect()
}
