//! Deterministic flat-color rendering for the pixel observation mode.
//!
//! Each grid cell becomes an axis-aligned block of a 100x100 RGB image
//! (channel-last, values in [0, 1]), with the goal row at the top of the
//! image. No anti-aliasing, no sprites: identical states render to identical
//! bytes.

use super::config::{EnvConfig, LaneDir};
use super::state::GridState;

pub const PIXEL_SIZE: usize = 100;
pub const PIXEL_CHANNELS: usize = 3;

const ROAD: [f64; 3] = [0.10, 0.10, 0.12];
const START: [f64; 3] = [0.16, 0.16, 0.22];
const GOAL: [f64; 3] = [0.90, 0.75, 0.20];
const WALL: [f64; 3] = [0.45, 0.45, 0.45];
const AGENT: [f64; 3] = [0.10, 0.90, 0.10];
const CAR_LEFT: [f64; 3] = [0.90, 0.15, 0.10];
const CAR_RIGHT: [f64; 3] = [0.20, 0.40, 0.95];

pub(super) fn pixel_frame(config: &EnvConfig, state: &GridState) -> Vec<f64> {
    let mut image = vec![0.0; PIXEL_SIZE * PIXEL_SIZE * PIXEL_CHANNELS];
    let grid_rows = config.grid_rows();

    for row in 0..grid_rows {
        let color = if row == config.goal_row() {
            GOAL
        } else if row == 0 {
            START
        } else {
            ROAD
        };
        for col in 0..config.cols {
            let c = if config.is_tunnel_cell(row, col) {
                WALL
            } else {
                color
            };
            fill_cell(&mut image, config, row, col, c);
        }
    }
    for car in &state.cars {
        let c = match car.dir {
            LaneDir::Left => CAR_LEFT,
            LaneDir::Right => CAR_RIGHT,
        };
        fill_cell(&mut image, config, car.row, car.col, c);
    }
    fill_cell(&mut image, config, state.agent.0, state.agent.1, AGENT);
    image
}

fn fill_cell(image: &mut [f64], config: &EnvConfig, row: usize, col: usize, color: [f64; 3]) {
    let grid_rows = config.grid_rows();
    // grid row 0 is at the bottom of the image
    let band = grid_rows - 1 - row;
    let y0 = band * PIXEL_SIZE / grid_rows;
    let y1 = (band + 1) * PIXEL_SIZE / grid_rows;
    let x0 = col * PIXEL_SIZE / config.cols;
    let x1 = (col + 1) * PIXEL_SIZE / config.cols;
    for y in y0..y1 {
        for x in x0..x1 {
            let base = (y * PIXEL_SIZE + x) * PIXEL_CHANNELS;
            image[base..base + 3].copy_from_slice(&color);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::config::RewardConfig;
    use super::super::dynamics::Env;
    use super::super::state::Action;
    use super::*;

    #[test]
    fn renders_are_the_right_size_and_range() {
        let config = EnvConfig {
            observation: super::super::config::ObsMode::Pixel,
            ..EnvConfig::default()
        };
        let env = Env::new(config, RewardConfig::dense()).unwrap();
        let (state, obs) = env.reset(0);
        assert_eq!(
            obs.frames[0].len(),
            PIXEL_SIZE * PIXEL_SIZE * PIXEL_CHANNELS
        );
        assert!(obs.frames[0].iter().all(|v| (0.0..=1.0).contains(v)));
        // deterministic
        assert_eq!(
            pixel_frame(&env.config, &state),
            pixel_frame(&env.config, &state)
        );
    }

    #[test]
    fn moving_changes_the_render() {
        let config = EnvConfig {
            observation: super::super::config::ObsMode::Pixel,
            lanes: vec![],
            ..EnvConfig::default()
        };
        let env = Env::new(config, RewardConfig::dense()).unwrap();
        let (state, _) = env.reset(0);
        let before = pixel_frame(&env.config, &state);
        let after = pixel_frame(
            &env.config,
            &env.step(&state, Action::Up).unwrap().next_state,
        );
        assert_ne!(before, after);
    }
}
