//! Combining the two agents' action scores.
//!
//! The advice-driven score vector and the experience-driven one are mixed as
//! `softmax(alpha * a_adv + (1 - alpha) * a_exp)`, with `alpha` stepping down
//! on a fixed episode schedule so authority hands over from advice to
//! experience as training progresses.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::Action;
use crate::nn::softmax_slice;

/// Pre-softmax utilities over the five actions, indexed by `Action`.
pub type ActionScores = [f64; Action::COUNT];

#[derive(Debug, Error)]
pub enum BlendError {
    #[error("non-finite action scores")]
    NonFinite,
    #[error("alpha {0} outside [0, 1]")]
    BadAlpha(f64),
    #[error("invalid action distribution: {0}")]
    BadDistribution(String),
}

/// Step-decayed blend weight: starts at `alpha0` and drops by `decay_step`
/// every `decay_interval` episodes, never below `floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSchedule {
    pub alpha0: f64,
    pub decay_step: f64,
    pub decay_interval: u32,
    pub floor: f64,
}

impl Default for AlphaSchedule {
    fn default() -> Self {
        Self {
            alpha0: 0.6,
            decay_step: 0.2,
            decay_interval: 2000,
            floor: 0.0,
        }
    }
}

impl AlphaSchedule {
    /// Blend weight for a (0-based) episode:
    /// `max(floor, alpha0 - decay_step * (episode / decay_interval))`.
    pub fn alpha_at(&self, episode: u32) -> f64 {
        let steps = (episode / self.decay_interval) as f64;
        self.floor.max(self.alpha0 - self.decay_step * steps)
    }

    /// First episode at which the floor is reached.
    pub fn floor_episode(&self) -> u32 {
        if self.decay_step <= 0.0 {
            return 0;
        }
        let steps = ((self.alpha0 - self.floor) / self.decay_step).ceil() as u32;
        steps * self.decay_interval
    }
}

/// Mixes the two score vectors at weight `alpha` and normalizes with softmax.
/// At exactly 0 or 1 the result reduces bitwise to the softmax of one input.
pub fn blend(
    a_adv: &ActionScores,
    a_exp: &ActionScores,
    alpha: f64,
) -> Result<ActionScores, BlendError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(BlendError::BadAlpha(alpha));
    }
    if a_adv.iter().chain(a_exp.iter()).any(|v| !v.is_finite()) {
        return Err(BlendError::NonFinite);
    }
    let mut mixed = [0.0; Action::COUNT];
    for i in 0..Action::COUNT {
        mixed[i] = alpha * a_adv[i] + (1.0 - alpha) * a_exp[i];
    }
    softmax_slice(&mut mixed);
    Ok(mixed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectMode {
    /// Draw from the distribution (used during training rollouts).
    Sample,
    /// Take the most probable action, ties toward the lower index.
    Greedy,
}

/// Picks an action from a probability vector.
pub fn select_action<R: Rng>(
    probs: &ActionScores,
    mode: SelectMode,
    rng: &mut R,
) -> Result<Action, BlendError> {
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(BlendError::BadDistribution(format!(
            "probabilities {probs:?} sum to {sum}"
        )));
    }
    let idx = match mode {
        SelectMode::Greedy => {
            let mut best = 0;
            for i in 1..Action::COUNT {
                if probs[i] > probs[best] {
                    best = i;
                }
            }
            best
        }
        SelectMode::Sample => {
            let draw: f64 = rng.random::<f64>() * sum;
            let mut acc = 0.0;
            let mut chosen = Action::COUNT - 1;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if draw < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        }
    };
    Ok(Action::from_index(idx).expect("index in range"))
}
