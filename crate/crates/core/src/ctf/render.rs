//! Text rendering of game states.
//!
//! Terrain uses the map characters (`b`, `r`, `#`, `B`, `R`). Alive blue
//! agents are drawn as `1`..`9` and alive red agents as `C`..`K`, by slot.

use super::map::{Pos, Team, Terrain};
use super::state::CtfState;
use crate::error::{Error, Result};

const BLUE_GLYPHS: &[u8] = b"123456789";
const RED_GLYPHS: &[u8] = b"CDEFGHIJK";

fn glyph(team: Team, slot: usize) -> char {
    let glyphs = match team {
        Team::Blue => BLUE_GLYPHS,
        Team::Red => RED_GLYPHS,
    };
    glyphs.get(slot).map_or('*', |&g| g as char)
}

pub fn render_text(state: &CtfState) -> String {
    let map = state.map();
    let mut out = String::with_capacity(((map.width() + 1) * map.height()) as usize);
    for y in 0..map.height() {
        for x in 0..map.width() {
            let p = Pos::new(x, y);
            let agent = [Team::Blue, Team::Red].into_iter().find_map(|team| {
                state
                    .team(team)
                    .iter()
                    .position(|a| a.alive && a.pos == p)
                    .map(|k| glyph(team, k))
            });
            let ch = agent.unwrap_or_else(|| {
                if p == map.flag(Team::Blue) {
                    'B'
                } else if p == map.flag(Team::Red) {
                    'R'
                } else {
                    match map.terrain(p) {
                        Terrain::Obstacle => '#',
                        Terrain::Territory(Team::Blue) => 'b',
                        Terrain::Territory(Team::Red) => 'r',
                    }
                }
            });
            out.push(ch);
        }
        out.push('\n');
    }
    out
}

/// `(slot, position)` pairs for one team.
pub type Slots = Vec<(usize, Pos)>;

/// Agent positions recovered from a rendering, as `(slot, position)` pairs
/// sorted by slot, blue first.
pub fn parse_agents(text: &str) -> Result<(Slots, Slots)> {
    let mut blue = Vec::new();
    let mut red = Vec::new();
    for (y, row) in text.lines().enumerate() {
        for (x, ch) in row.chars().enumerate() {
            let pos = Pos::new(x as i32, y as i32);
            let byte = u8::try_from(ch).unwrap_or(0);
            if let Some(k) = BLUE_GLYPHS.iter().position(|&g| g == byte) {
                blue.push((k, pos));
            } else if let Some(k) = RED_GLYPHS.iter().position(|&g| g == byte) {
                red.push((k, pos));
            } else if !"brBR#".contains(ch) {
                return Err(Error::InvalidMap(format!("unexpected character {ch:?} at ({x}, {y})")));
            }
        }
    }
    blue.sort();
    red.sort();
    Ok((blue, red))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctf::map::MapSpec;
    use crate::ctf::state::GameRules;
    use std::sync::Arc;

    #[test]
    fn round_trip_positions() {
        let map = Arc::new(MapSpec::default_map());
        for seed in 0..20 {
            let state = CtfState::reset(map.clone(), 2, 3, GameRules::default(), seed).unwrap();
            let text = render_text(&state);
            assert_eq!(
                text,
                render_text(&CtfState::reset(map.clone(), 2, 3, GameRules::default(), seed).unwrap())
            );
            let (blue, red) = parse_agents(&text).unwrap();
            let want_blue: Vec<_> = state.blue().iter().map(|a| a.pos).enumerate().collect();
            let want_red: Vec<_> = state.red().iter().map(|a| a.pos).enumerate().collect();
            assert_eq!(blue, want_blue);
            assert_eq!(red, want_red);
        }
    }

    #[test]
    fn obstacles_render_as_hash() {
        let map = Arc::new(MapSpec::default_map());
        let state = CtfState::reset(map.clone(), 1, 1, GameRules::default(), 0).unwrap();
        let text = render_text(&state);
        let rows: Vec<&str> = text.lines().collect();
        for (p, t) in map.cells() {
            if t == Terrain::Obstacle {
                assert_eq!(rows[p.y as usize].as_bytes()[p.x as usize], b'#');
            }
        }
    }
}
