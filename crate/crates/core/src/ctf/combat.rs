//! Stochastic elimination between adjacent opponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Win probabilities for one adjacent blue-red encounter.
///
/// Each encounter eliminates exactly one of the two agents. If exactly one
/// agent stands on its own territory it is the favored side and wins with
/// `home_win`; otherwise blue is taken as the reference side at
/// `contested_win`. The reference side then gains `ally_bonus` per teammate
/// adjacent to it and loses `enemy_penalty` per opponent adjacent to it beyond
/// the one it is fighting, and the result is clamped to `[p_min, p_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CombatTable {
    pub home_win: f64,
    pub contested_win: f64,
    pub ally_bonus: f64,
    pub enemy_penalty: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl Default for CombatTable {
    fn default() -> Self {
        Self {
            home_win: 0.75,
            contested_win: 0.5,
            ally_bonus: 0.10,
            enemy_penalty: 0.10,
            p_min: 0.05,
            p_max: 0.95,
        }
    }
}

impl CombatTable {
    pub fn validate(&self) -> Result<()> {
        let probs = [self.home_win, self.contested_win, self.p_min, self.p_max];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidConfig(vec![format!(
                "combat probabilities must lie in [0, 1]: {self:?}"
            )]));
        }
        if self.p_min > self.p_max {
            return Err(Error::InvalidConfig(vec!["combat p_min exceeds p_max".into()]));
        }
        if !(self.ally_bonus.is_finite() && self.enemy_penalty.is_finite()) {
            return Err(Error::InvalidConfig(vec!["combat modifiers must be finite".into()]));
        }
        Ok(())
    }

    /// Probability that the reference side wins, given its neighborhood.
    pub fn reference_win(&self, favored: bool, allies: usize, extra_enemies: usize) -> f64 {
        let base = if favored { self.home_win } else { self.contested_win };
        let p = base + self.ally_bonus * allies as f64 - self.enemy_penalty * extra_enemies as f64;
        p.clamp(self.p_min, self.p_max)
    }
}
