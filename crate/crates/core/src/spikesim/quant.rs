use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric linear weight quantization with one scale per layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct QuantSpec {
    bits: u32,
}

impl QuantSpec {
    pub const MIN_BITS: u32 = 2;
    pub const MAX_BITS: u32 = 16;

    pub fn new(bits: u32) -> Result<Self> {
        if !(Self::MIN_BITS..=Self::MAX_BITS).contains(&bits) {
            return Err(Error::InvalidQuant(format!(
                "bits must lie in [{}, {}], got {bits}",
                Self::MIN_BITS,
                Self::MAX_BITS
            )));
        }
        Ok(Self { bits })
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    /// Largest representable integer level, `2^(bits-1) - 1`.
    pub fn max_level(self) -> f64 {
        ((1u32 << (self.bits - 1)) - 1) as f64
    }

    /// Grid spacing for a layer, or `None` when every weight is zero.
    pub fn step(self, weights: &[f64]) -> Option<f64> {
        let max = weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        (max > 0.0).then(|| max / self.max_level())
    }
}

impl Default for QuantSpec {
    fn default() -> Self {
        Self { bits: 8 }
    }
}

impl TryFrom<u32> for QuantSpec {
    type Error = Error;
    fn try_from(bits: u32) -> Result<Self> {
        Self::new(bits)
    }
}

impl From<QuantSpec> for u32 {
    fn from(q: QuantSpec) -> u32 {
        q.bits
    }
}

/// Round every weight to the nearest of the `2^bits - 1` symmetric levels
/// spanning `[-max|w|, max|w|]`. An all-zero layer is returned unchanged.
pub fn quantize(weights: &[f64], spec: QuantSpec) -> Vec<f64> {
    match spec.step(weights) {
        None => weights.to_vec(),
        Some(step) => weights.iter().map(|w| (w / step).round() * step).collect(),
    }
}
