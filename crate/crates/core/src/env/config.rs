use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::state::Event;
use super::{EnvError, Result};

/// Direction a lane's cars travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaneDir {
    Left,
    Right,
}

/// One row of traffic: every car in the lane advances one cell in `dir`
/// each time the tick count crosses a multiple of `period`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarLane {
    pub row: usize,
    pub dir: LaneDir,
    pub period: u32,
    /// Starting columns, also the deterministic cyclic spawn pattern.
    pub offsets: Vec<usize>,
}

/// What `Observation` frames contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObsMode {
    /// Binary feature planes over the grid (the default).
    #[default]
    Feature,
    /// Flat-color 100x100 RGB renders.
    Pixel,
}

/// Level geometry and traffic schedule.
///
/// Rows `0..rows` are traversal rows with row 0 the starting row at the
/// bottom; the goal row sits at index `rows`. The tunnel occupies
/// `tunnel_cols` of `tunnel_row`; agents cannot enter those cells but cars
/// drive straight through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub rows: usize,
    pub cols: usize,
    pub tunnel_row: usize,
    pub tunnel_cols: Vec<usize>,
    pub lanes: Vec<CarLane>,
    pub max_steps: u32,
    #[serde(default)]
    pub observation: ObsMode,
    /// Rotate each lane's spawn offsets by a seeded random amount at reset.
    /// Off by default; the enumeration oracle refuses configs that set it.
    #[serde(default)]
    pub random_car_offsets: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            rows: 8,
            cols: 9,
            tunnel_row: 4,
            tunnel_cols: (0..9).filter(|c| *c != 4).collect(),
            lanes: vec![
                CarLane {
                    row: 1,
                    dir: LaneDir::Left,
                    period: 1,
                    offsets: vec![0, 3, 6],
                },
                CarLane {
                    row: 2,
                    dir: LaneDir::Right,
                    period: 2,
                    offsets: vec![1, 5],
                },
                CarLane {
                    row: 3,
                    dir: LaneDir::Left,
                    period: 2,
                    offsets: vec![2, 6],
                },
                CarLane {
                    row: 4,
                    dir: LaneDir::Right,
                    period: 1,
                    offsets: vec![0, 4],
                },
                CarLane {
                    row: 5,
                    dir: LaneDir::Left,
                    period: 2,
                    offsets: vec![3, 7],
                },
                CarLane {
                    row: 6,
                    dir: LaneDir::Right,
                    period: 1,
                    offsets: vec![2, 6],
                },
                CarLane {
                    row: 7,
                    dir: LaneDir::Left,
                    period: 2,
                    offsets: vec![1, 4],
                },
            ],
            max_steps: 200,
            observation: ObsMode::Feature,
            random_car_offsets: false,
        }
    }
}

impl EnvConfig {
    /// Index of the goal row (one above the last traversal row).
    pub fn goal_row(&self) -> usize {
        self.rows
    }

    /// Grid rows including the goal row.
    pub fn grid_rows(&self) -> usize {
        self.rows + 1
    }

    pub fn start_col(&self) -> usize {
        self.cols / 2
    }

    pub fn is_tunnel_cell(&self, row: usize, col: usize) -> bool {
        row == self.tunnel_row && self.tunnel_cols.contains(&col)
    }

    pub fn lane_for_row(&self, row: usize) -> Option<&CarLane> {
        self.lanes.iter().find(|l| l.row == row)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 {
            return Err(EnvError::Config(format!(
                "rows must be at least 2, got {}",
                self.rows
            )));
        }
        if self.cols < 3 {
            return Err(EnvError::Config(format!(
                "cols must be at least 3, got {}",
                self.cols
            )));
        }
        if self.tunnel_row < 1 || self.tunnel_row + 1 >= self.rows {
            return Err(EnvError::Config(format!(
                "tunnel_row {} must lie strictly inside the traversal band 1..{}",
                self.tunnel_row,
                self.rows - 1
            )));
        }
        if self.tunnel_cols.is_empty() {
            return Err(EnvError::Config("tunnel_cols must not be empty".into()));
        }
        if self.tunnel_cols.len() >= self.cols {
            return Err(EnvError::Config(
                "tunnel_cols must be a strict subset of the columns".into(),
            ));
        }
        if let Some(c) = self.tunnel_cols.iter().find(|c| **c >= self.cols) {
            return Err(EnvError::Config(format!("tunnel column {c} out of range")));
        }
        if self.max_steps == 0 {
            return Err(EnvError::Config("max_steps must be positive".into()));
        }
        let mut seen_rows = Vec::new();
        for lane in &self.lanes {
            if lane.row == 0 || lane.row >= self.rows {
                return Err(EnvError::Config(format!(
                    "car lane row {} must be a non-start traversal row",
                    lane.row
                )));
            }
            if seen_rows.contains(&lane.row) {
                return Err(EnvError::Config(format!(
                    "duplicate car lane for row {}",
                    lane.row
                )));
            }
            seen_rows.push(lane.row);
            if lane.period < 1 {
                return Err(EnvError::Config(format!(
                    "lane {} period must be at least 1",
                    lane.row
                )));
            }
            if let Some(c) = lane.offsets.iter().find(|c| **c >= self.cols) {
                return Err(EnvError::Config(format!(
                    "lane {} offset {c} out of range",
                    lane.row
                )));
            }
        }
        Ok(())
    }
}

/// Per-event reward values, composed additively when one transition fires
/// several clauses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub mode: RewardMode,
    pub goal: f64,
    pub row_first_visit: BTreeMap<usize, f64>,
    pub tunnel_pass: f64,
    pub level_up: f64,
    pub wait_start: f64,
    pub wait_other: f64,
    pub blocked: f64,
    pub collision: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardMode {
    Dense,
    Sparse,
}

impl RewardConfig {
    pub fn dense() -> Self {
        let mut row_first_visit = BTreeMap::new();
        row_first_visit.insert(2, 10.0);
        Self {
            mode: RewardMode::Dense,
            goal: 400.0,
            row_first_visit,
            tunnel_pass: 100.0,
            level_up: 1.0,
            wait_start: -5.0,
            wait_other: -1.0,
            blocked: -2.0,
            collision: -20.0,
        }
    }

    /// Goal and death only; every other clause is zeroed.
    pub fn sparse() -> Self {
        Self {
            mode: RewardMode::Sparse,
            goal: 400.0,
            row_first_visit: BTreeMap::new(),
            tunnel_pass: 0.0,
            level_up: 0.0,
            wait_start: 0.0,
            wait_other: 0.0,
            blocked: 0.0,
            collision: -20.0,
        }
    }

    pub fn for_mode(mode: RewardMode) -> Self {
        match mode {
            RewardMode::Dense => Self::dense(),
            RewardMode::Sparse => Self::sparse(),
        }
    }

    pub fn value_of(&self, event: &Event) -> f64 {
        match event {
            Event::ReachedGoal => self.goal,
            Event::ReachedRowFirstTime(r) => self.row_first_visit.get(r).copied().unwrap_or(0.0),
            Event::PassedTunnel => self.tunnel_pass,
            Event::LevelUp => self.level_up,
            Event::Waited { at_start: true } => self.wait_start,
            Event::Waited { at_start: false } => self.wait_other,
            Event::BlockedBySide | Event::BlockedByTunnel => self.blocked,
            Event::Collision => self.collision,
        }
    }
}
