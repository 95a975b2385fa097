use rand::{Rng, SeedableRng};

use super::config::{EnvConfig, LaneDir, ObsMode, RewardConfig};
use super::render::pixel_frame;
use super::state::{
    feature_frame, Action, Car, Event, GridState, Observation, RowSet, StepOutcome, TerminalCause,
    STACKED_FRAMES,
};
use super::{EnvError, Result};

/// The Frogger MDP: pure transition functions over [`GridState`], combined
/// with whatever reward table the caller configured. Methods take `&self`,
/// so one `Env` can serve any number of concurrent episodes.
#[derive(Debug, Clone)]
pub struct Env {
    pub config: EnvConfig,
    pub reward: RewardConfig,
}

impl Env {
    pub fn new(config: EnvConfig, reward: RewardConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, reward })
    }

    /// Fresh episode state: agent at the start-row center, only row 0
    /// visited, all four frame slots holding the initial frame.
    pub fn reset(&self, seed: u64) -> (GridState, Observation) {
        let state = GridState {
            agent: (0, self.config.start_col()),
            cars: self.initial_cars(seed),
            visited_rows: RowSet::with_row(0),
            tick: 0,
            terminal: None,
        };
        let obs = self.observe(&state, &[]);
        (state, obs)
    }

    fn initial_cars(&self, seed: u64) -> Vec<Car> {
        let mut rotation_rng = self.config.random_car_offsets.then(|| seeded_rng(seed));
        let mut cars = Vec::new();
        for lane in &self.config.lanes {
            let rot = match &mut rotation_rng {
                Some(rng) => (rng.random::<u64>() % self.config.cols as u64) as usize,
                None => 0,
            };
            for &offset in &lane.offsets {
                cars.push(Car {
                    row: lane.row,
                    col: (offset + rot) % self.config.cols,
                    dir: lane.dir,
                });
            }
        }
        cars
    }

    /// One transition. Cars advance on their schedules, then the agent's
    /// move resolves (staying put when a grid edge or the tunnel blocks it),
    /// then collisions are checked against the settled positions.
    pub fn step(&self, state: &GridState, action: Action) -> Result<StepOutcome> {
        if let Some(cause) = state.terminal {
            return Err(EnvError::TerminalStep(cause));
        }

        let cfg = &self.config;
        let next_tick = state.tick + 1;
        let old_cars = &state.cars;
        let new_cars: Vec<Car> = old_cars
            .iter()
            .map(|car| {
                let period = cfg.lane_for_row(car.row).map(|l| l.period).unwrap_or(1);
                if next_tick.is_multiple_of(period) {
                    let col = match car.dir {
                        LaneDir::Left => (car.col + cfg.cols - 1) % cfg.cols,
                        LaneDir::Right => (car.col + 1) % cfg.cols,
                    };
                    Car { col, ..*car }
                } else {
                    *car
                }
            })
            .collect();

        let (row, col) = state.agent;
        let mut events = Vec::new();
        let target = match action {
            Action::NoOp => {
                events.push(Event::Waited { at_start: row == 0 });
                (row, col)
            }
            Action::Up => (row + 1, col),
            Action::Down => {
                if row == 0 {
                    events.push(Event::BlockedBySide);
                    (row, col)
                } else {
                    (row - 1, col)
                }
            }
            Action::Left => {
                if col == 0 {
                    events.push(Event::BlockedBySide);
                    (row, col)
                } else {
                    (row, col - 1)
                }
            }
            Action::Right => {
                if col + 1 == cfg.cols {
                    events.push(Event::BlockedBySide);
                    (row, col)
                } else {
                    (row, col + 1)
                }
            }
        };
        let new_agent = if target != (row, col) && cfg.is_tunnel_cell(target.0, target.1) {
            events.push(Event::BlockedByTunnel);
            (row, col)
        } else {
            target
        };

        // Collision: the agent shares a cell with a settled car, or the two
        // swapped cells during this tick.
        let moved = new_agent != (row, col);
        let collided = old_cars.iter().zip(&new_cars).any(|(before, after)| {
            let occupies = (after.row, after.col) == new_agent;
            let swapped = moved
                && (before.row, before.col) == new_agent
                && (after.row, after.col) == (row, col);
            occupies || swapped
        });

        let mut visited = state.visited_rows;
        let mut terminal = None;
        if collided {
            // The move never completes: a death replaces any progress events.
            events.clear();
            events.push(Event::Collision);
            terminal = Some(TerminalCause::Collision);
        } else {
            if new_agent.0 > row {
                events.push(Event::LevelUp);
            }
            if new_agent.0 == cfg.goal_row() {
                events.push(Event::ReachedGoal);
                terminal = Some(TerminalCause::Goal);
            } else if moved && !visited.contains(new_agent.0) {
                events.push(Event::ReachedRowFirstTime(new_agent.0));
                if new_agent.0 == cfg.tunnel_row {
                    events.push(Event::PassedTunnel);
                }
                visited.insert(new_agent.0);
            }
        }
        if terminal.is_none() && next_tick >= cfg.max_steps {
            terminal = Some(TerminalCause::Timeout);
        }

        let reward = events.iter().map(|e| self.reward.value_of(e)).sum();
        let next_state = GridState {
            agent: if collided { (row, col) } else { new_agent },
            cars: new_cars,
            visited_rows: visited,
            tick: next_tick,
            terminal,
        };
        Ok(StepOutcome {
            terminal: next_state.is_terminal(),
            next_state,
            reward,
            events,
        })
    }

    /// Stacks the current state's frame behind up to three prior states,
    /// padding by repeating the oldest available frame, and derives the
    /// goal-status vector from the visited rows.
    pub fn observe(&self, state: &GridState, history: &[GridState]) -> Observation {
        debug_assert!(history.len() < STACKED_FRAMES);
        let mut frames: Vec<Vec<f64>> = history
            .iter()
            .chain(std::iter::once(state))
            .map(|s| self.frame(s))
            .collect();
        while frames.len() < STACKED_FRAMES {
            frames.insert(0, frames[0].clone());
        }
        let goal_vector = (0..self.config.rows)
            .map(|r| {
                if state.visited_rows.contains(r) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let frames: [Vec<f64>; STACKED_FRAMES] = frames.try_into().expect("exactly 4 frames");
        Observation {
            frames,
            goal_vector,
        }
    }

    /// One frame in the configured observation mode.
    pub fn frame(&self, state: &GridState) -> Vec<f64> {
        match self.config.observation {
            ObsMode::Feature => feature_frame(&self.config, state),
            ObsMode::Pixel => pixel_frame(&self.config, state),
        }
    }

    pub fn frame_len(&self) -> usize {
        match self.config.observation {
            ObsMode::Feature => {
                super::state::FRAME_CHANNELS * self.config.grid_rows() * self.config.cols
            }
            ObsMode::Pixel => {
                super::render::PIXEL_SIZE
                    * super::render::PIXEL_SIZE
                    * super::render::PIXEL_CHANNELS
            }
        }
    }
}

/// Small deterministic generator for offset rotation; episode dynamics stay
/// pure functions of (config, seed).
fn seeded_rng(seed: u64) -> impl Rng {
    rand::rngs::StdRng::seed_from_u64(seed)
}

/// Convenience wrapper owning one episode's state and frame history.
#[derive(Debug, Clone)]
pub struct Episode {
    env: Env,
    state: GridState,
    history: Vec<GridState>,
}

impl Episode {
    pub fn start(env: Env, seed: u64) -> Self {
        let (state, _) = env.reset(seed);
        Self {
            env,
            state,
            history: Vec::new(),
        }
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    pub fn state(&self) -> &GridState {
        &self.state
    }

    pub fn is_terminal(&self) -> bool {
        self.state.is_terminal()
    }

    pub fn observation(&self) -> Observation {
        self.env.observe(&self.state, &self.history)
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        let outcome = self.env.step(&self.state, action)?;
        self.history.push(self.state.clone());
        if self.history.len() >= STACKED_FRAMES {
            self.history.remove(0);
        }
        self.state = outcome.next_state.clone();
        Ok(outcome)
    }

    pub fn reset(&mut self, seed: u64) {
        let (state, _) = self.env.reset(seed);
        self.state = state;
        self.history.clear();
    }

    /// Up to three states preceding the current one, oldest first.
    pub fn history(&self) -> &[GridState] {
        &self.history
    }

    /// Reinstates a mid-episode position, e.g. from a run checkpoint.
    pub fn restore(&mut self, state: GridState, history: Vec<GridState>) {
        debug_assert!(history.len() < STACKED_FRAMES);
        self.state = state;
        self.history = history;
    }
}
