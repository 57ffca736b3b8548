//! Scripted red-team opponents.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::map::{MapSpec, Pos, Team};
use super::state::{Action, CtfState};

pub const DEFAULT_PATROL_RADIUS: u32 = 4;
pub const PATROL_STAY_PROB: f64 = 0.2;

/// Opponent selection as it appears in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedKind {
    RandomWalk,
    Patrol,
}

impl RedKind {
    pub fn name(self) -> &'static str {
        match self {
            RedKind::RandomWalk => "random_walk",
            RedKind::Patrol => "patrol",
        }
    }
}

/// A red policy bound to a map.
#[derive(Debug, Clone)]
pub enum RedPolicy {
    RandomWalk,
    Patrol(Patrol),
}

impl RedPolicy {
    pub fn new(kind: RedKind, map: &MapSpec, patrol_radius: u32) -> Self {
        match kind {
            RedKind::RandomWalk => RedPolicy::RandomWalk,
            RedKind::Patrol => RedPolicy::Patrol(Patrol::new(map, patrol_radius)),
        }
    }

    /// One entry per red slot; `None` for eliminated agents.
    pub fn actions<R: Rng>(&self, state: &CtfState, rng: &mut R) -> Vec<Option<Action>> {
        match self {
            RedPolicy::RandomWalk => red_random_walk(state, rng),
            RedPolicy::Patrol(p) => p.actions(state, rng),
        }
    }
}

pub fn red_random_walk<R: Rng>(state: &CtfState, rng: &mut R) -> Vec<Option<Action>> {
    state
        .red()
        .iter()
        .map(|a| a.alive.then(|| Action::ALL[rng.gen_range(0..Action::COUNT)]))
        .collect()
}

/// Defender that holds the strip of red territory near the boundary and
/// close to the red flag.
#[derive(Debug, Clone)]
pub struct Patrol {
    width: i32,
    band: Vec<Pos>,
    in_band: Vec<bool>,
    distance: Vec<u32>,
    passable: Vec<bool>,
}

impl Patrol {
    pub fn new(map: &MapSpec, radius: u32) -> Self {
        let band = map.border_band_cells(Team::Red, radius);
        let idx = |p: Pos| (p.y * map.width() + p.x) as usize;
        let mut in_band = vec![false; (map.width() * map.height()) as usize];
        for p in &band {
            in_band[idx(*p)] = true;
        }
        let distance = map
            .cells()
            .map(|(p, _)| band.iter().map(|b| p.manhattan(*b)).min().unwrap_or(u32::MAX))
            .collect();
        let passable = map.cells().map(|(p, _)| map.is_passable(p)).collect();
        Self {
            width: map.width(),
            band,
            in_band,
            distance,
            passable,
        }
    }

    pub fn band(&self) -> &[Pos] {
        &self.band
    }

    fn index(&self, p: Pos) -> Option<usize> {
        let height = self.passable.len() as i32 / self.width;
        (p.x >= 0 && p.y >= 0 && p.x < self.width && p.y < height).then(|| (p.y * self.width + p.x) as usize)
    }

    pub fn in_band(&self, p: Pos) -> bool {
        self.index(p).is_some_and(|k| self.in_band[k])
    }

    /// Manhattan distance from `p` to the nearest band cell.
    pub fn distance_to_band(&self, p: Pos) -> u32 {
        self.index(p).map_or(u32::MAX, |k| self.distance[k])
    }

    fn legal(&self, p: Pos) -> bool {
        self.index(p).is_some_and(|k| self.passable[k])
    }

    /// Action for one agent at `p`.
    pub fn choose<R: Rng>(&self, p: Pos, rng: &mut R) -> Action {
        if self.band.is_empty() {
            return Action::Stay;
        }
        if !self.in_band(p) {
            let mut best = Action::Stay;
            let mut best_d = self.distance_to_band(p);
            for a in Action::ALL {
                let t = a.apply(p);
                if self.legal(t) && self.distance_to_band(t) < best_d {
                    best = a;
                    best_d = self.distance_to_band(t);
                }
            }
            return best;
        }
        let moves: Vec<Action> = Action::ALL[..4]
            .iter()
            .copied()
            .filter(|a| {
                let t = a.apply(p);
                self.legal(t) && self.in_band(t)
            })
            .collect();
        if moves.is_empty() || rng.gen::<f64>() < PATROL_STAY_PROB {
            Action::Stay
        } else {
            moves[rng.gen_range(0..moves.len())]
        }
    }

    pub fn actions<R: Rng>(&self, state: &CtfState, rng: &mut R) -> Vec<Option<Action>> {
        state
            .red()
            .iter()
            .map(|a| a.alive.then(|| self.choose(a.pos, rng)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctf::state::GameRules;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn random_walk_is_uniform() {
        let map = Arc::new(MapSpec::default_map());
        let state = CtfState::reset(map, 1, 1, GameRules::default(), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 5];
        let n = 100_000;
        for _ in 0..n {
            let a = red_random_walk(&state, &mut rng)[0].unwrap();
            counts[a.index()] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.2).abs() < 0.005, "{counts:?}");
        }
    }

    #[test]
    fn dead_agents_emit_nothing() {
        let map = Arc::new(MapSpec::default_map());
        let mut state = CtfState::reset(map.clone(), 1, 2, GameRules::default(), 3).unwrap();
        let mut a = state.red()[1];
        a.alive = false;
        state.set_agent(Team::Red, 1, a);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let walk = red_random_walk(&state, &mut rng);
        assert!(walk[0].is_some() && walk[1].is_none());
        let patrol = Patrol::new(&map, DEFAULT_PATROL_RADIUS);
        let acts = patrol.actions(&state, &mut rng);
        assert!(acts[0].is_some() && acts[1].is_none());
    }

    #[test]
    fn random_walk_is_deterministic_per_stream() {
        let map = Arc::new(MapSpec::default_map());
        let state = CtfState::reset(map, 1, 3, GameRules::default(), 3).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| red_random_walk(&state, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn tie_break_follows_action_order() {
        // band is the single cell (2, 1); from (3, 0) both Down and Left
        // reduce the distance, and Down comes first.
        let map = MapSpec::parse("bBrrr\nbbrRr\nbbrrr\n").unwrap().with_border_band(1);
        let patrol = Patrol::new(&map, 1);
        assert_eq!(patrol.band(), &[Pos::new(2, 1)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = Pos::new(3, 0);
        let first = patrol.choose(p, &mut rng);
        for _ in 0..20 {
            assert_eq!(patrol.choose(p, &mut rng), first);
        }
        assert_eq!(first, Action::Down);
    }
}
