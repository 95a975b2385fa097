//! The experience-driven agent: an actor-critic over stacked frame
//! observations, trained with clipped-surrogate PPO on environmental reward
//! only. Its raw actor logits are the experience score vector consumed by
//! the blending rule.

mod model;
mod ppo;
mod rollout;

pub use model::{ActorCritic, NetConfig, PolicyEval};
pub use ppo::{
    clipped_surrogate, normalize_advantages, policy_ratios, ppo_minibatch_loss, ppo_update,
    MinibatchEval, MinibatchRefs, UpdateStats,
};
pub use rollout::{collect_rollout, compute_advantages, RolloutBuffer, RolloutWorld, WorldStep};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EdaError {
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
    #[error(transparent)]
    Blend(#[from] crate::blend::BlendError),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("non-finite loss; update aborted and parameters restored")]
    NonFiniteLoss,
}

pub type Result<T> = std::result::Result<T, EdaError>;

/// PPO hyperparameters. Defaults follow common practice; the learning rate
/// default matches the experience agent's.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    pub rollout_length: usize,
    pub value_loss_coeff: f64,
    pub entropy_coeff: f64,
    pub learning_rate: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            epochs_per_update: 4,
            minibatch_size: 64,
            rollout_length: 256,
            value_loss_coeff: 0.5,
            entropy_coeff: 0.01,
            learning_rate: 1e-4,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(EdaError::Contract(format!(
                "gamma {} outside (0, 1]",
                self.gamma
            )));
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return Err(EdaError::Contract(format!(
                "clip_epsilon {} outside (0, 1)",
                self.clip_epsilon
            )));
        }
        if self.rollout_length < self.minibatch_size {
            return Err(EdaError::Contract(format!(
                "rollout_length {} shorter than minibatch_size {}",
                self.rollout_length, self.minibatch_size
            )));
        }
        if self.minibatch_size == 0 || self.epochs_per_update == 0 {
            return Err(EdaError::Contract(
                "minibatch_size and epochs_per_update must be positive".into(),
            ));
        }
        Ok(())
    }
}
