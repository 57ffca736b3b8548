//! Grid maps: territories, obstacles, flags, spawn zones.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Team {
    Blue,
    Red,
}

impl Team {
    pub fn name(self) -> &'static str {
        match self {
            Team::Blue => "blue",
            Team::Red => "red",
        }
    }

    pub fn opponent(self) -> Team {
        match self {
            Team::Blue => Team::Red,
            Team::Red => Team::Blue,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terrain {
    Territory(Team),
    Obstacle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Pos) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn is_adjacent(self, other: Pos) -> bool {
        self.manhattan(other) == 1
    }
}

/// Map shipped with the crate: 10x10, vertical split, mirrored obstacles and flags.
pub const DEFAULT_MAP: &str = include_str!("../../maps/default_10x10.txt");

pub const DEFAULT_BORDER_BAND: u32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    width: i32,
    height: i32,
    cells: Vec<Terrain>,
    blue_flag: Pos,
    red_flag: Pos,
    blue_spawn: Vec<Pos>,
    red_spawn: Vec<Pos>,
    border_band: u32,
}

impl MapSpec {
    /// Parse the text map format.
    ///
    /// One row per line, top row first, one character per cell:
    /// `b`/`r` territory, `#` obstacle, `B`/`R` flags, `s`/`S` blue/red
    /// territory cells that are also spawn cells. Without any `s` (`S`) the
    /// blue (red) spawn zone is the whole team territory minus its flag.
    /// Blank lines and lines starting with `;` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty() && !l.starts_with(';'))
            .collect();
        if rows.is_empty() {
            return Err(Error::InvalidMap("no grid rows".into()));
        }
        let width = rows[0].chars().count();
        let height = rows.len();
        let mut cells = Vec::with_capacity(width * height);
        let mut blue_flags = Vec::new();
        let mut red_flags = Vec::new();
        let mut blue_marked = Vec::new();
        let mut red_marked = Vec::new();
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::InvalidMap(format!(
                    "row {y} has {} cells, expected {width}",
                    row.chars().count()
                )));
            }
            for (x, ch) in row.chars().enumerate() {
                let pos = Pos::new(x as i32, y as i32);
                let terrain = match ch {
                    'b' => Terrain::Territory(Team::Blue),
                    'r' => Terrain::Territory(Team::Red),
                    '#' => Terrain::Obstacle,
                    'B' => {
                        blue_flags.push(pos);
                        Terrain::Territory(Team::Blue)
                    }
                    'R' => {
                        red_flags.push(pos);
                        Terrain::Territory(Team::Red)
                    }
                    's' => {
                        blue_marked.push(pos);
                        Terrain::Territory(Team::Blue)
                    }
                    'S' => {
                        red_marked.push(pos);
                        Terrain::Territory(Team::Red)
                    }
                    other => {
                        return Err(Error::InvalidMap(format!(
                            "unknown cell character {other:?} at ({x}, {y})"
                        )));
                    }
                };
                cells.push(terrain);
            }
        }
        let single = |flags: Vec<Pos>, name: &str| match flags.as_slice() {
            [p] => Ok(*p),
            [] => Err(Error::InvalidMap(format!("no {name} flag"))),
            many => Err(Error::InvalidMap(format!(
                "{} {name} flags, expected exactly one",
                many.len()
            ))),
        };
        let blue_flag = single(blue_flags, "blue")?;
        let red_flag = single(red_flags, "red")?;

        let territory = |team: Team, flag: Pos| -> Vec<Pos> {
            cells
                .iter()
                .enumerate()
                .map(|(k, t)| (Pos::new((k % width) as i32, (k / width) as i32), t))
                .filter(|(p, t)| **t == Terrain::Territory(team) && *p != flag)
                .map(|(p, _)| p)
                .collect()
        };
        if blue_marked.is_empty() {
            blue_marked = territory(Team::Blue, blue_flag);
        }
        if red_marked.is_empty() {
            red_marked = territory(Team::Red, red_flag);
        }
        for (team, zone) in [(Team::Blue, &blue_marked), (Team::Red, &red_marked)] {
            if zone.is_empty() {
                return Err(Error::InvalidMap(format!("{} spawn zone is empty", team.name())));
            }
        }
        let map = Self {
            width: width as i32,
            height: height as i32,
            cells,
            blue_flag,
            red_flag,
            blue_spawn: blue_marked,
            red_spawn: red_marked,
            border_band: DEFAULT_BORDER_BAND,
        };
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn default_map() -> Self {
        Self::parse(DEFAULT_MAP).expect("bundled map is valid")
    }

    pub fn with_border_band(mut self, band: u32) -> Self {
        self.border_band = band;
        self
    }

    pub fn width(&self) -> i32 {
        self.width
    }
    pub fn height(&self) -> i32 {
        self.height
    }
    pub fn border_band(&self) -> u32 {
        self.border_band
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && p.x < self.width && p.y < self.height
    }

    /// Terrain at `p`; out-of-bounds cells read as obstacles.
    pub fn terrain(&self, p: Pos) -> Terrain {
        if self.in_bounds(p) {
            self.cells[(p.y * self.width + p.x) as usize]
        } else {
            Terrain::Obstacle
        }
    }

    pub fn is_passable(&self, p: Pos) -> bool {
        self.terrain(p) != Terrain::Obstacle
    }

    pub fn owner(&self, p: Pos) -> Option<Team> {
        match self.terrain(p) {
            Terrain::Territory(t) => Some(t),
            Terrain::Obstacle => None,
        }
    }

    pub fn flag(&self, team: Team) -> Pos {
        match team {
            Team::Blue => self.blue_flag,
            Team::Red => self.red_flag,
        }
    }

    pub fn spawn_zone(&self, team: Team) -> &[Pos] {
        match team {
            Team::Blue => &self.blue_spawn,
            Team::Red => &self.red_spawn,
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = (Pos, Terrain)> + '_ {
        (0..self.height).flat_map(move |y| {
            (0..self.width).map(move |x| (Pos::new(x, y), self.cells[(y * self.width + x) as usize]))
        })
    }

    /// Manhattan distance from `p` to the closest cell owned by the other team.
    pub fn distance_to_boundary(&self, p: Pos) -> Option<u32> {
        let own = self.owner(p)?;
        self.cells()
            .filter(|(_, t)| *t == Terrain::Territory(own.opponent()))
            .map(|(q, _)| p.manhattan(q))
            .min()
    }

    /// Cells a patrolling defender of `team` holds: own territory, within
    /// `border_band` of the boundary and within `radius` of its own flag.
    pub fn border_band_cells(&self, team: Team, radius: u32) -> Vec<Pos> {
        let flag = self.flag(team);
        self.cells()
            .filter(|(p, t)| {
                *t == Terrain::Territory(team)
                    && p.manhattan(flag) <= radius
                    && self.distance_to_boundary(*p).is_some_and(|d| d <= self.border_band)
            })
            .map(|(p, _)| p)
            .collect()
    }

    /// Text form accepted by [`MapSpec::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for y in 0..self.height {
            for x in 0..self.width {
                let p = Pos::new(x, y);
                let ch = if p == self.blue_flag {
                    'B'
                } else if p == self.red_flag {
                    'R'
                } else {
                    match self.terrain(p) {
                        Terrain::Obstacle => '#',
                        Terrain::Territory(Team::Blue) => 'b',
                        Terrain::Territory(Team::Red) => 'r',
                    }
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}
