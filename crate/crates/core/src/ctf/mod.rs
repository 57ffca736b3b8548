//! Capture-the-flag gridworld: blue agents under training against scripted red
//! agents on a two-colored map with obstacles.

pub mod combat;
pub mod env;
pub mod map;
pub mod red;
pub mod render;
pub mod state;

pub use combat::CombatTable;
pub use env::{CtfEnv, Scenario};
pub use map::{MapSpec, Pos, Team, Terrain};
pub use red::{RedKind, RedPolicy};
pub use render::render_text;
pub use state::{Action, Agent, CtfState, GameRules, StepOutcome, Terminal};
