//! Deterministic Frogger gridworld.
//!
//! The agent starts in the bottom row and must reach the row above the last
//! traffic row. Cars slide along fixed lanes on deterministic cyclic
//! schedules, and the center traffic row is walled off by a tunnel with a
//! single passable gap that only cars may drive through. Rewards come in a
//! dense flavor (milestone bonuses and step penalties) and a sparse one
//! (goal and death only).

mod config;
mod dynamics;
mod oracle;
mod render;
mod state;

pub use config::{CarLane, EnvConfig, LaneDir, ObsMode, RewardConfig, RewardMode};
pub use dynamics::{Env, Episode};
pub use oracle::{reachable_states, solve_oracle, OracleTable, StateKey, ENUMERATION_CAP};
pub use render::{PIXEL_CHANNELS, PIXEL_SIZE};
pub use state::{
    Action, Car, Event, GridState, Observation, RowSet, StepOutcome, TerminalCause, FRAME_CHANNELS,
    STACKED_FRAMES,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("step on a terminal state ({0:?})")]
    TerminalStep(TerminalCause),
    #[error("state space too large to enumerate: {0} keys exceeds cap of {1}")]
    Capacity(usize, usize),
}

pub type Result<T> = std::result::Result<T, EnvError>;
