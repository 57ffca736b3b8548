use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::combat::CombatTable;
use super::map::{MapSpec, Pos, Team};
use super::red::RedPolicy;
use crate::error::{Error, Result};

/// Per-agent move. The declaration order is also the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Stay,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::Up, Action::Down, Action::Left, Action::Right, Action::Stay];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    pub fn apply(self, p: Pos) -> Pos {
        match self {
            Action::Up => Pos::new(p.x, p.y - 1),
            Action::Down => Pos::new(p.x, p.y + 1),
            Action::Left => Pos::new(p.x - 1, p.y),
            Action::Right => Pos::new(p.x + 1, p.y),
            Action::Stay => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    FlagCapture,
    Defeated,
    LostFlag,
    TimeUp,
}

impl Terminal {
    pub const ALL: [Terminal; 4] = [
        Terminal::FlagCapture,
        Terminal::Defeated,
        Terminal::LostFlag,
        Terminal::TimeUp,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Terminal::FlagCapture => "Flag Capture",
            Terminal::Defeated => "Defeated",
            Terminal::LostFlag => "Lost Flag",
            Terminal::TimeUp => "Time-up",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Agent {
    pub pos: Pos,
    pub alive: bool,
}

/// Episode rules that are not part of the map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameRules {
    pub max_steps: u32,
    pub step_penalty: f64,
    pub combat: CombatTable,
}

impl Default for GameRules {
    fn default() -> Self {
        Self {
            max_steps: 150,
            step_penalty: 0.001,
            combat: CombatTable::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub terminal: Option<Terminal>,
    /// Agents removed in this step's combat phase, in resolution order.
    pub eliminated: Vec<(Team, usize)>,
}

/// Full game state. Owns its random stream, so equal seeds and equal action
/// sequences give identical trajectories.
#[derive(Debug, Clone)]
pub struct CtfState {
    map: Arc<MapSpec>,
    rules: GameRules,
    blue: Vec<Agent>,
    red: Vec<Agent>,
    step_count: u32,
    rng: ChaCha8Rng,
    terminal: Option<Terminal>,
}

impl CtfState {
    /// New episode with agents placed uniformly at random in their spawn zones.
    pub fn reset(map: Arc<MapSpec>, n_blue: usize, n_red: usize, rules: GameRules, seed: u64) -> Result<Self> {
        if n_blue == 0 || n_red == 0 {
            return Err(Error::InvalidConfig(vec!["each team needs at least one agent".into()]));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut place = |team: Team, n: usize| -> Result<Vec<Agent>> {
            let zone = map.spawn_zone(team);
            if n > zone.len() {
                return Err(Error::SpawnOverfull {
                    team: team.name(),
                    capacity: zone.len(),
                    requested: n,
                });
            }
            Ok(index::sample(&mut rng, zone.len(), n)
                .into_iter()
                .map(|k| Agent {
                    pos: zone[k],
                    alive: true,
                })
                .collect())
        };
        let blue = place(Team::Blue, n_blue)?;
        let red = place(Team::Red, n_red)?;
        Ok(Self {
            map,
            rules,
            blue,
            red,
            step_count: 0,
            rng,
            terminal: None,
        })
    }

    /// State with agents at explicit positions (all alive).
    pub fn from_positions(map: Arc<MapSpec>, blue: &[Pos], red: &[Pos], rules: GameRules, seed: u64) -> Result<Self> {
        let all: Vec<Pos> = blue.iter().chain(red).copied().collect();
        for (k, p) in all.iter().enumerate() {
            if !map.is_passable(*p) {
                return Err(Error::InvalidConfig(vec![format!(
                    "agent position {p:?} is not passable"
                )]));
            }
            if all[..k].contains(p) {
                return Err(Error::InvalidConfig(vec![format!("two agents share {p:?}")]));
            }
        }
        let agents = |ps: &[Pos]| ps.iter().map(|&pos| Agent { pos, alive: true }).collect();
        Ok(Self {
            map,
            rules,
            blue: agents(blue),
            red: agents(red),
            step_count: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            terminal: None,
        })
    }

    pub fn map(&self) -> &MapSpec {
        &self.map
    }
    pub fn rules(&self) -> &GameRules {
        &self.rules
    }
    pub fn blue(&self) -> &[Agent] {
        &self.blue
    }
    pub fn red(&self) -> &[Agent] {
        &self.red
    }
    pub fn team(&self, team: Team) -> &[Agent] {
        match team {
            Team::Blue => &self.blue,
            Team::Red => &self.red,
        }
    }
    pub fn step_count(&self) -> u32 {
        self.step_count
    }
    pub fn terminal(&self) -> Option<Terminal> {
        self.terminal
    }
    pub fn is_terminal(&self) -> bool {
        self.terminal.is_some()
    }

    pub fn alive_count(&self, team: Team) -> usize {
        self.team(team).iter().filter(|a| a.alive).count()
    }

    /// Advance one step: red policy, simultaneous moves, combat, terminal check.
    pub fn step(&mut self, blue_actions: &[Option<Action>], red_policy: &RedPolicy) -> Result<StepOutcome> {
        if self.terminal.is_some() {
            return Err(Error::EpisodeTerminated);
        }
        self.check_actions(Team::Blue, blue_actions)?;
        let mut rng = self.rng.clone();
        let red_actions = red_policy.actions(self, &mut rng);
        self.rng = rng;
        self.advance(blue_actions, &red_actions)
    }

    /// Like [`CtfState::step`] with red moves given explicitly.
    pub fn step_with_red_actions(
        &mut self,
        blue_actions: &[Option<Action>],
        red_actions: &[Option<Action>],
    ) -> Result<StepOutcome> {
        if self.terminal.is_some() {
            return Err(Error::EpisodeTerminated);
        }
        self.check_actions(Team::Blue, blue_actions)?;
        self.check_actions(Team::Red, red_actions)?;
        self.advance(blue_actions, red_actions)
    }

    fn check_actions(&self, team: Team, actions: &[Option<Action>]) -> Result<()> {
        let agents = self.team(team);
        if actions.len() != agents.len() {
            return Err(Error::InvalidAction(format!(
                "{} actions for {} {} agents",
                actions.len(),
                agents.len(),
                team.name()
            )));
        }
        for (k, (agent, action)) in agents.iter().zip(actions).enumerate() {
            match (agent.alive, action) {
                (true, None) => {
                    return Err(Error::InvalidAction(format!(
                        "{} agent {k} is alive but has no action",
                        team.name()
                    )))
                }
                (false, Some(_)) => {
                    return Err(Error::InvalidAction(format!("{} agent {k} is eliminated", team.name())))
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn advance(&mut self, blue_actions: &[Option<Action>], red_actions: &[Option<Action>]) -> Result<StepOutcome> {
        self.resolve_moves(blue_actions, red_actions);
        self.step_count += 1;
        let eliminated = self.resolve_combat();
        let terminal = self.check_terminal();
        self.terminal = terminal;
        let reward = match terminal {
            Some(Terminal::FlagCapture) => 1.0,
            Some(Terminal::Defeated) | Some(Terminal::LostFlag) => -1.0,
            Some(Terminal::TimeUp) => 0.0,
            None => -self.rules.step_penalty,
        };
        Ok(StepOutcome {
            reward,
            terminal,
            eliminated,
        })
    }

    /// Moves into walls, obstacles, or cells occupied at the start of the step
    /// become stays; movers sharing a target all stay.
    fn resolve_moves(&mut self, blue_actions: &[Option<Action>], red_actions: &[Option<Action>]) {
        let occupied: Vec<Pos> = self
            .blue
            .iter()
            .chain(&self.red)
            .filter(|a| a.alive)
            .map(|a| a.pos)
            .collect();
        let mut targets: Vec<Option<Pos>> = self
            .blue
            .iter()
            .zip(blue_actions)
            .chain(self.red.iter().zip(red_actions))
            .map(|(agent, action)| {
                let action = (*action)?;
                if !agent.alive || action == Action::Stay {
                    return None;
                }
                let t = action.apply(agent.pos);
                (self.map.is_passable(t) && !occupied.contains(&t)).then_some(t)
            })
            .collect();
        for k in 0..targets.len() {
            if let Some(t) = targets[k] {
                let shared = targets.iter().enumerate().any(|(j, o)| j != k && *o == Some(t));
                if shared {
                    for o in targets.iter_mut().filter(|o| **o == Some(t)) {
                        *o = None;
                    }
                }
            }
        }
        let n_blue = self.blue.len();
        for (k, t) in targets.into_iter().enumerate() {
            if let Some(t) = t {
                if k < n_blue {
                    self.blue[k].pos = t;
                } else {
                    self.red[k - n_blue].pos = t;
                }
            }
        }
    }

    fn neighbors_of(&self, team: Team, p: Pos, skip: Option<usize>) -> usize {
        self.team(team)
            .iter()
            .enumerate()
            .filter(|(k, a)| a.alive && Some(*k) != skip && a.pos.is_adjacent(p))
            .count()
    }

    /// One elimination roll per adjacent pair, pairs in (blue, red) index order.
    fn resolve_combat(&mut self) -> Vec<(Team, usize)> {
        let mut eliminated = Vec::new();
        for b in 0..self.blue.len() {
            for r in 0..self.red.len() {
                let (blue, red) = (self.blue[b], self.red[r]);
                if !blue.alive || !red.alive || !blue.pos.is_adjacent(red.pos) {
                    continue;
                }
                let blue_home = self.map.owner(blue.pos) == Some(Team::Blue);
                let red_home = self.map.owner(red.pos) == Some(Team::Red);
                let (reference, favored) = match (blue_home, red_home) {
                    (true, false) => (Team::Blue, true),
                    (false, true) => (Team::Red, true),
                    _ => (Team::Blue, false),
                };
                let (pos, idx) = match reference {
                    Team::Blue => (blue.pos, b),
                    Team::Red => (red.pos, r),
                };
                let allies = self.neighbors_of(reference, pos, Some(idx));
                let enemies = self.neighbors_of(reference.opponent(), pos, None);
                let p_ref = self
                    .rules
                    .combat
                    .reference_win(favored, allies, enemies.saturating_sub(1));
                let p_blue = if reference == Team::Blue { p_ref } else { 1.0 - p_ref };
                if self.rng.gen::<f64>() < p_blue {
                    self.red[r].alive = false;
                    eliminated.push((Team::Red, r));
                } else {
                    self.blue[b].alive = false;
                    eliminated.push((Team::Blue, b));
                }
            }
        }
        eliminated
    }

    fn check_terminal(&self) -> Option<Terminal> {
        let red_flag = self.map.flag(Team::Red);
        let blue_flag = self.map.flag(Team::Blue);
        if self.blue.iter().any(|a| a.alive && a.pos == red_flag) {
            Some(Terminal::FlagCapture)
        } else if self.blue.iter().all(|a| !a.alive) {
            Some(Terminal::Defeated)
        } else if self.red.iter().any(|a| a.alive && a.pos == blue_flag) {
            Some(Terminal::LostFlag)
        } else if self.step_count >= self.rules.max_steps {
            Some(Terminal::TimeUp)
        } else {
            None
        }
    }

    /// Observation length for a team layout.
    pub fn observation_len(n_blue: usize, n_red: usize) -> usize {
        3 * (n_blue + n_red) + 4
    }

    /// `(x, y, alive)` per blue slot then red slot, then the blue and red flag
    /// positions. Coordinates are scaled to `[0, 1]`; eliminated agents keep
    /// their last position.
    pub fn observe(&self) -> Vec<f64> {
        let sx = 1.0 / (self.map.width() - 1).max(1) as f64;
        let sy = 1.0 / (self.map.height() - 1).max(1) as f64;
        let mut obs = Vec::with_capacity(Self::observation_len(self.blue.len(), self.red.len()));
        for a in self.blue.iter().chain(&self.red) {
            obs.extend([
                a.pos.x as f64 * sx,
                a.pos.y as f64 * sy,
                if a.alive { 1.0 } else { 0.0 },
            ]);
        }
        for team in [Team::Blue, Team::Red] {
            let f = self.map.flag(team);
            obs.extend([f.x as f64 * sx, f.y as f64 * sy]);
        }
        obs
    }

    /// Overwrite positions; test support for scripted scenarios.
    #[doc(hidden)]
    pub fn set_agent(&mut self, team: Team, k: usize, agent: Agent) {
        match team {
            Team::Blue => self.blue[k] = agent,
            Team::Red => self.red[k] = agent,
        }
    }
}
