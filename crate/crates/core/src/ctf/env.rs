use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::map::MapSpec;
use super::red::{RedKind, RedPolicy, DEFAULT_PATROL_RADIUS};
use super::state::{Action, CtfState, GameRules, StepOutcome, Terminal};
use crate::error::{Error, Result};
use crate::ppo::{Environment, Transition};

/// Scenario settings that do not depend on the map source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub n_blue: usize,
    pub n_red: usize,
    pub red_policy: RedKind,
    pub patrol_radius: u32,
    pub rules: GameRules,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            n_blue: 1,
            n_red: 1,
            red_policy: RedKind::RandomWalk,
            patrol_radius: DEFAULT_PATROL_RADIUS,
            rules: GameRules::default(),
        }
    }
}

/// The capture-the-flag game behind the training interface: blue is
/// controlled, red follows a scripted policy.
#[derive(Debug, Clone)]
pub struct CtfEnv {
    map: Arc<MapSpec>,
    scenario: Scenario,
    red: RedPolicy,
    heads: Vec<usize>,
    state: Option<CtfState>,
}

impl CtfEnv {
    pub fn new(map: Arc<MapSpec>, scenario: Scenario) -> Result<Self> {
        scenario.rules.combat.validate()?;
        if scenario.rules.max_steps == 0 {
            return Err(Error::InvalidConfig(vec!["max_steps must be positive".into()]));
        }
        // surface spawn problems at construction rather than on first reset
        CtfState::reset(map.clone(), scenario.n_blue, scenario.n_red, scenario.rules, 0)?;
        let red = RedPolicy::new(scenario.red_policy, &map, scenario.patrol_radius);
        Ok(Self {
            heads: vec![Action::COUNT; scenario.n_blue],
            map,
            scenario,
            red,
            state: None,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn map(&self) -> &Arc<MapSpec> {
        &self.map
    }

    pub fn state(&self) -> Option<&CtfState> {
        self.state.as_ref()
    }

    pub fn terminal(&self) -> Option<Terminal> {
        self.state.as_ref().and_then(CtfState::terminal)
    }

    /// Step with explicit blue actions, exposing the full outcome.
    pub fn step_game(&mut self, actions: &[usize]) -> Result<StepOutcome> {
        let state = self.state.as_mut().ok_or(Error::EpisodeTerminated)?;
        if actions.len() != state.blue().len() {
            return Err(Error::InvalidAction(format!(
                "{} actions for {} blue agents",
                actions.len(),
                state.blue().len()
            )));
        }
        let blue = state
            .blue()
            .iter()
            .zip(actions)
            .map(|(agent, &a)| {
                if !agent.alive {
                    return Ok(None);
                }
                Action::from_index(a)
                    .map(Some)
                    .ok_or_else(|| Error::InvalidAction(format!("action index {a} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        state.step(&blue, &self.red)
    }
}

impl Environment for CtfEnv {
    fn observation_dim(&self) -> usize {
        CtfState::observation_len(self.scenario.n_blue, self.scenario.n_red)
    }

    fn action_heads(&self) -> &[usize] {
        &self.heads
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let state = CtfState::reset(
            self.map.clone(),
            self.scenario.n_blue,
            self.scenario.n_red,
            self.scenario.rules,
            seed,
        )?;
        let obs = state.observe();
        self.state = Some(state);
        Ok(obs)
    }

    fn active_heads(&self) -> Vec<bool> {
        match &self.state {
            Some(s) => s.blue().iter().map(|a| a.alive).collect(),
            None => vec![true; self.heads.len()],
        }
    }

    fn step(&mut self, actions: &[usize]) -> Result<Transition> {
        let outcome = self.step_game(actions)?;
        let observation = self.state.as_ref().map(CtfState::observe).unwrap_or_default();
        Ok(Transition {
            observation,
            reward: outcome.reward,
            terminated: matches!(
                outcome.terminal,
                Some(Terminal::FlagCapture | Terminal::Defeated | Terminal::LostFlag)
            ),
            truncated: outcome.terminal == Some(Terminal::TimeUp),
        })
    }
}
