use rand::Rng;

use super::model::ActorCritic;
use super::{PpoConfig, Result};
use crate::blend::{select_action, ActionScores, SelectMode};
use crate::env::{Action, Observation};

/// What one environment step reports back to the collector.
#[derive(Debug, Clone, Copy)]
pub struct WorldStep {
    pub reward: f64,
    pub terminal: bool,
}

/// The collector's view of an environment. Implementations own episode
/// bookkeeping: `step` must reset into a fresh episode after reporting a
/// terminal transition, so `observation` is always valid.
pub trait RolloutWorld {
    fn observation(&self) -> Observation;

    fn step(&mut self, action: Action) -> WorldStep;

    /// Distribution actions are drawn from. The default acts with the
    /// experience policy itself; shaped worlds blend advice scores in.
    fn behavior_probs(&mut self, eda_logits: &ActionScores) -> Result<ActionScores> {
        let mut probs = *eda_logits;
        crate::nn::softmax_slice(&mut probs);
        Ok(probs)
    }
}

/// Per-step records for one update, plus the critic bootstrap for a rollout
/// cut mid-episode.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub observations: Vec<Observation>,
    pub actions: Vec<usize>,
    /// Log-probabilities of the taken actions under the experience policy at
    /// collection time (the PPO reference policy), even when the behavior
    /// distribution was blended.
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub terminals: Vec<bool>,
    pub bootstrap_value: f64,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Gathers `length` transitions, sampling from the world's behavior
/// distribution while recording the experience policy's own log-probs.
/// Episodes reset inside the world on termination.
pub fn collect_rollout<W: RolloutWorld, R: Rng>(
    world: &mut W,
    model: &ActorCritic,
    length: usize,
    rng: &mut R,
) -> Result<RolloutBuffer> {
    let mut buffer = RolloutBuffer::default();
    for _ in 0..length {
        let obs = world.observation();
        let eval = model.evaluate(&obs)?;
        let behavior = world.behavior_probs(&eval.logits)?;
        let action = select_action(&behavior, SelectMode::Sample, rng)?;
        let log_prob = model.log_prob(&eval.logits, action);
        let step = world.step(action);

        buffer.observations.push(obs);
        buffer.actions.push(action.index());
        buffer.log_probs.push(log_prob);
        buffer.rewards.push(step.reward);
        buffer.values.push(eval.value);
        buffer.terminals.push(step.terminal);
    }
    buffer.bootstrap_value = if buffer.terminals.last().copied().unwrap_or(true) {
        0.0
    } else {
        model.evaluate(&world.observation())?.value
    };
    Ok(buffer)
}

/// Generalized advantage estimation over the buffer, with bootstrapping cut
/// at terminal steps. Returns are advantages plus values. Advantages are
/// left unnormalized here; the update normalizes per batch.
pub fn compute_advantages(buffer: &mut RolloutBuffer, cfg: &PpoConfig) {
    let n = buffer.len();
    buffer.advantages = vec![0.0; n];
    buffer.returns = vec![0.0; n];
    let mut carry = 0.0;
    for t in (0..n).rev() {
        let not_done = if buffer.terminals[t] { 0.0 } else { 1.0 };
        let next_value = if t + 1 < n {
            buffer.values[t + 1]
        } else {
            buffer.bootstrap_value
        };
        let delta = buffer.rewards[t] + cfg.gamma * not_done * next_value - buffer.values[t];
        carry = delta + cfg.gamma * cfg.gae_lambda * not_done * carry;
        buffer.advantages[t] = carry;
        buffer.returns[t] = carry + buffer.values[t];
    }
}
