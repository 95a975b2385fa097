use serde::{Deserialize, Serialize};

use super::config::{EnvConfig, LaneDir};

/// Frames stacked into one observation.
pub const STACKED_FRAMES: usize = 4;

/// Feature planes per frame: agent, car-moving-left, car-moving-right,
/// tunnel, goal-row.
pub const FRAME_CHANNELS: usize = 5;

/// The five moves, with fixed indices: Up=0, Down=1, Left=2, Right=3, NoOp=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    NoOp,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::NoOp,
    ];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        match self {
            Action::Up => 0,
            Action::Down => 1,
            Action::Left => 2,
            Action::Right => 3,
            Action::NoOp => 4,
        }
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
            Action::NoOp => "noop",
        };
        f.write_str(s)
    }
}

/// Bitset of traversal rows visited this episode. Only grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RowSet(pub u32);

impl RowSet {
    pub fn with_row(row: usize) -> Self {
        let mut s = Self::default();
        s.insert(row);
        s
    }

    pub fn insert(&mut self, row: usize) {
        debug_assert!(row < 32);
        self.0 |= 1 << row;
    }

    pub fn contains(&self, row: usize) -> bool {
        row < 32 && self.0 & (1 << row) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    /// Highest set row, or None when empty.
    pub fn max_row(&self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            Some(31 - self.0.leading_zeros() as usize)
        }
    }

    pub fn is_superset_of(&self, other: &RowSet) -> bool {
        self.0 & other.0 == other.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Car {
    pub row: usize,
    pub col: usize,
    pub dir: LaneDir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminalCause {
    Goal,
    Collision,
    Timeout,
}

/// Full world state. Pure data; all dynamics live in [`super::Env`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    /// (row, col), row 0 at the bottom.
    pub agent: (usize, usize),
    pub cars: Vec<Car>,
    pub visited_rows: RowSet,
    pub tick: u32,
    pub terminal: Option<TerminalCause>,
}

impl GridState {
    pub fn is_terminal(&self) -> bool {
        self.terminal.is_some()
    }
}

/// What happened during one transition. Rewards are the sum of the active
/// reward table over these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Event {
    ReachedRowFirstTime(usize),
    PassedTunnel,
    ReachedGoal,
    Collision,
    BlockedBySide,
    BlockedByTunnel,
    Waited { at_start: bool },
    LevelUp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: GridState,
    pub reward: f64,
    pub terminal: bool,
    pub events: Vec<Event>,
}

/// Four stacked frames (oldest first) plus the per-row goal-status vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub frames: [Vec<f64>; STACKED_FRAMES],
    pub goal_vector: Vec<f64>,
}

impl Observation {
    pub fn frame_len(&self) -> usize {
        self.frames[0].len()
    }
}

/// Builds the binary feature planes for one state.
pub(super) fn feature_frame(config: &EnvConfig, state: &GridState) -> Vec<f64> {
    let (gr, cols) = (config.grid_rows(), config.cols);
    let plane = gr * cols;
    let mut frame = vec![0.0; FRAME_CHANNELS * plane];
    let at = |ch: usize, row: usize, col: usize| ch * plane + row * cols + col;

    frame[at(0, state.agent.0, state.agent.1)] = 1.0;
    for car in &state.cars {
        let ch = match car.dir {
            LaneDir::Left => 1,
            LaneDir::Right => 2,
        };
        frame[at(ch, car.row, car.col)] = 1.0;
    }
    for &c in &config.tunnel_cols {
        frame[at(3, config.tunnel_row, c)] = 1.0;
    }
    for c in 0..cols {
        frame[at(4, config.goal_row(), c)] = 1.0;
    }
    frame
}
