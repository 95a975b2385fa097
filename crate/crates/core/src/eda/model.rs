use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Result;
use crate::blend::ActionScores;
use crate::env::{Action, Observation, STACKED_FRAMES};
use crate::nn::{
    log_softmax_slice, softmax_slice, Affine, GruCell, ParamSet, Tape, Tensor, TracedTensor,
};

/// Network sizes for the actor-critic.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NetConfig {
    pub frame_dim: usize,
    pub goal_dim: usize,
    /// Per-frame embedding width.
    pub embed_dim: usize,
    /// Recurrent aggregator width.
    pub hidden_dim: usize,
    /// One encoder+aggregator tower for both heads, or separate towers.
    pub shared_encoder: bool,
}

impl NetConfig {
    pub fn new(frame_dim: usize, goal_dim: usize) -> Self {
        Self {
            frame_dim,
            goal_dim,
            embed_dim: 64,
            hidden_dim: 64,
            shared_encoder: true,
        }
    }

    pub fn with_sizes(mut self, embed_dim: usize, hidden_dim: usize) -> Self {
        self.embed_dim = embed_dim;
        self.hidden_dim = hidden_dim;
        self
    }
}

struct Tower {
    encoder: Affine,
    aggregator: GruCell,
}

impl Tower {
    fn new<R: Rng>(params: &mut ParamSet, prefix: &str, cfg: &NetConfig, rng: &mut R) -> Self {
        Self {
            encoder: Affine::new(
                params,
                &format!("{prefix}.encoder"),
                cfg.frame_dim,
                cfg.embed_dim,
                rng,
            ),
            aggregator: GruCell::new(
                params,
                &format!("{prefix}.agg"),
                cfg.embed_dim,
                cfg.hidden_dim,
                rng,
            ),
        }
    }

    /// Encodes each stacked frame, runs the recurrent aggregator across them,
    /// and appends the goal-status vector.
    fn forward(
        &self,
        tape: &mut Tape,
        params: &ParamSet,
        frames: &[TracedTensor; STACKED_FRAMES],
        goal: TracedTensor,
    ) -> Result<TracedTensor> {
        let mut embeddings = Vec::with_capacity(STACKED_FRAMES);
        for &frame in frames {
            let e = self.encoder.forward(tape, params, frame)?;
            embeddings.push(tape.relu(e));
        }
        let h = self.aggregator.run(tape, params, &embeddings)?;
        Ok(tape.concat_cols(h, goal)?)
    }
}

/// Actor-critic over stacked-frame observations. The actor head emits the
/// five raw action scores; the critic head a scalar state value. Output
/// heads start zeroed so a fresh policy is exactly uniform.
pub struct ActorCritic {
    pub config: NetConfig,
    pub params: ParamSet,
    actor_tower: Tower,
    critic_tower: Option<Tower>,
    actor_head: Affine,
    critic_head: Affine,
}

/// A policy evaluation for one observation.
#[derive(Debug, Clone, Copy)]
pub struct PolicyEval {
    pub logits: ActionScores,
    pub probs: ActionScores,
    pub value: f64,
}

impl ActorCritic {
    pub fn new<R: Rng>(config: NetConfig, rng: &mut R) -> Self {
        let mut params = ParamSet::new();
        let actor_tower = Tower::new(&mut params, "actor", &config, rng);
        let critic_tower = if config.shared_encoder {
            None
        } else {
            Some(Tower::new(&mut params, "critic", &config, rng))
        };
        let head_in = config.hidden_dim + config.goal_dim;
        let actor_head = Affine::new_zeroed(&mut params, "actor.head", head_in, Action::COUNT);
        let critic_head = Affine::new_zeroed(&mut params, "critic.head", head_in, 1);
        Self {
            config,
            params,
            actor_tower,
            critic_tower,
            actor_head,
            critic_head,
        }
    }

    /// Replaces parameter values with those from `loaded`, matched by name.
    pub fn load_params(&mut self, loaded: &ParamSet) -> Result<()> {
        for p in self.params.iter_mut() {
            let source = loaded.by_name(&p.name).ok_or_else(|| {
                super::EdaError::Contract(format!("checkpoint is missing parameter {}", p.name))
            })?;
            let source = loaded.get(source);
            if source.value.shape() != p.value.shape() {
                return Err(super::EdaError::Contract(format!(
                    "checkpoint parameter {} has shape {:?}, expected {:?}",
                    p.name,
                    source.value.shape(),
                    p.value.shape()
                )));
            }
            p.value = source.value.clone();
        }
        Ok(())
    }

    fn traced_obs(
        &self,
        tape: &mut Tape,
        observations: &[&Observation],
    ) -> ([TracedTensor; STACKED_FRAMES], TracedTensor) {
        let m = observations.len();
        let frame_dim = self.config.frame_dim;
        let mut frames = Vec::with_capacity(STACKED_FRAMES);
        for k in 0..STACKED_FRAMES {
            let mut values = Vec::with_capacity(m * frame_dim);
            for obs in observations {
                values.extend_from_slice(&obs.frames[k]);
            }
            frames.push(tape.constant(Tensor::from_raw(vec![m, frame_dim], values)));
        }
        let mut goal = Vec::with_capacity(m * self.config.goal_dim);
        for obs in observations {
            goal.extend_from_slice(&obs.goal_vector);
        }
        let goal = tape.constant(Tensor::from_raw(vec![m, self.config.goal_dim], goal));
        (frames.try_into().expect("stacked frame count"), goal)
    }

    /// Batched forward pass: actor logits (m x 5) and critic values (m x 1).
    pub fn forward(
        &self,
        tape: &mut Tape,
        observations: &[&Observation],
    ) -> Result<(TracedTensor, TracedTensor)> {
        self.forward_with(&self.params, tape, observations)
    }

    /// Forward pass against an explicit parameter set sharing this model's
    /// layout (the gradient checker perturbs a clone).
    pub fn forward_with(
        &self,
        params: &ParamSet,
        tape: &mut Tape,
        observations: &[&Observation],
    ) -> Result<(TracedTensor, TracedTensor)> {
        let (frames, goal) = self.traced_obs(tape, observations);
        let actor_feat = self.actor_tower.forward(tape, params, &frames, goal)?;
        let critic_feat = match &self.critic_tower {
            Some(tower) => tower.forward(tape, params, &frames, goal)?,
            None => actor_feat,
        };
        let logits = self.actor_head.forward(tape, params, actor_feat)?;
        let values = self.critic_head.forward(tape, params, critic_feat)?;
        Ok((logits, values))
    }

    /// Single-observation evaluation used during rollouts. Identical
    /// arithmetic to the batched path, so log-probabilities recomputed at
    /// update time reproduce these bit-for-bit.
    pub fn evaluate(&self, obs: &Observation) -> Result<PolicyEval> {
        let mut tape = Tape::new();
        let (logits_t, values_t) = self.forward(&mut tape, &[obs])?;
        let mut logits = [0.0; Action::COUNT];
        logits.copy_from_slice(tape.value(logits_t).values());
        let value = tape.value(values_t).values()[0];
        let mut probs = logits;
        softmax_slice(&mut probs);
        Ok(PolicyEval {
            logits,
            probs,
            value,
        })
    }

    /// Raw scores and probabilities for one observation.
    pub fn action_distribution(&self, obs: &Observation) -> Result<(ActionScores, ActionScores)> {
        let eval = self.evaluate(obs)?;
        Ok((eval.logits, eval.probs))
    }

    /// Log-probability of one action under the current policy for one
    /// observation, computed with the shared log-softmax path.
    pub fn log_prob(&self, logits: &ActionScores, action: Action) -> f64 {
        let mut lsm = *logits;
        log_softmax_slice(&mut lsm);
        lsm[action.index()]
    }
}
