use rand::seq::SliceRandom;
use rand::Rng;

use super::model::ActorCritic;
use super::rollout::RolloutBuffer;
use super::{EdaError, PpoConfig, Result};
use crate::env::{Action, Observation};
use crate::nn::{adam_step, AdamState, ParamSet, Tape, Tensor, TracedTensor};

/// Loss pieces and ratio diagnostics averaged over one update.
#[derive(Debug, Clone, Copy, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub total_loss: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
    pub minibatches: usize,
}

/// The clipped objective per sample:
/// `min(ratio * adv, clamp(ratio, 1-eps, 1+eps) * adv)`.
pub fn clipped_surrogate(
    tape: &mut Tape,
    ratio: TracedTensor,
    advantage: TracedTensor,
    epsilon: f64,
) -> Result<TracedTensor> {
    let unclipped = tape.mul(ratio, advantage)?;
    let clipped_ratio = tape.clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    let clipped = tape.mul(clipped_ratio, advantage)?;
    Ok(tape.min_elem(unclipped, clipped)?)
}

/// Recomputes the current-policy/old-policy probability ratios for every
/// step in the buffer, without touching gradients. Immediately after
/// collection this is exactly 1 everywhere.
pub fn policy_ratios(model: &ActorCritic, buffer: &RolloutBuffer) -> Result<Vec<f64>> {
    buffer
        .observations
        .iter()
        .zip(&buffer.actions)
        .zip(&buffer.log_probs)
        .map(|((obs, &action), &lp_old)| {
            let eval = model.evaluate(obs)?;
            let action = Action::from_index(action)
                .ok_or_else(|| EdaError::Contract(format!("action index {action}")))?;
            let lp = model.log_prob(&eval.logits, action);
            Ok((lp - lp_old).exp())
        })
        .collect()
}

/// Normalizes advantages to zero mean and unit variance, with the standard
/// deviation floored at 1e-8.
pub fn normalize_advantages(advantages: &[f64]) -> Vec<f64> {
    let n = advantages.len().max(1) as f64;
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages
        .iter()
        .map(|a| (a - mean) * (a - mean))
        .sum::<f64>()
        / n;
    let std = var.sqrt().max(1e-8);
    advantages.iter().map(|a| (a - mean) / std).collect()
}

/// One minibatch of update inputs, already normalized and indexed.
pub struct MinibatchRefs<'a> {
    pub observations: Vec<&'a Observation>,
    pub actions: Vec<usize>,
    pub log_probs_old: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

/// Raw values read off the tape for diagnostics.
pub struct MinibatchEval {
    pub loss: TracedTensor,
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub ratios: Vec<f64>,
}

/// Builds the full PPO loss for one minibatch on the tape:
/// `-surrogate + c_v * mse(value, return) - c_e * entropy`.
pub fn ppo_minibatch_loss(
    model: &ActorCritic,
    params: &ParamSet,
    tape: &mut Tape,
    batch: &MinibatchRefs<'_>,
    cfg: &PpoConfig,
) -> Result<MinibatchEval> {
    let m = batch.observations.len();
    let column = |values: &[f64]| Tensor::from_raw(vec![values.len(), 1], values.to_vec());

    let (logits, values) = model.forward_with(params, tape, &batch.observations)?;
    let lsm = tape.log_softmax(logits);
    let lp = tape.gather_cols(lsm, &batch.actions)?;
    let lp_old = tape.constant(column(&batch.log_probs_old));
    let lp_diff = tape.sub(lp, lp_old)?;
    let ratio = tape.exp(lp_diff);

    let adv = tape.constant(column(&batch.advantages));
    let surr = clipped_surrogate(tape, ratio, adv, cfg.clip_epsilon)?;
    let surrogate_mean = tape.mean(surr);

    let returns = tape.constant(column(&batch.returns));
    let vdiff = tape.sub(values, returns)?;
    let vsq = tape.mul(vdiff, vdiff)?;
    let value_loss = tape.mean(vsq);

    let probs = tape.softmax(logits);
    let plogp = tape.mul(probs, lsm)?;
    let nent = tape.sum(plogp);
    let entropy_mean = tape.affine_scalar(nent, -1.0 / m as f64, 0.0);

    let neg_surr = tape.affine_scalar(surrogate_mean, -1.0, 0.0);
    let v_term = tape.affine_scalar(value_loss, cfg.value_loss_coeff, 0.0);
    let e_term = tape.affine_scalar(entropy_mean, -cfg.entropy_coeff, 0.0);
    let partial = tape.add(neg_surr, v_term)?;
    let loss = tape.add(partial, e_term)?;

    Ok(MinibatchEval {
        surrogate: tape.value(surrogate_mean).item(),
        value_loss: tape.value(value_loss).item(),
        entropy: tape.value(entropy_mean).item(),
        ratios: tape.value(ratio).values().to_vec(),
        loss,
    })
}

/// Runs `epochs_per_update` passes of shuffled minibatches over the buffer,
/// one Adam step per minibatch. A non-finite loss aborts the update and
/// restores both the parameters and the optimizer state.
pub fn ppo_update<R: Rng>(
    model: &mut ActorCritic,
    buffer: &RolloutBuffer,
    cfg: &PpoConfig,
    adam: &mut AdamState,
    rng: &mut R,
) -> Result<UpdateStats> {
    cfg.validate()?;
    if buffer.is_empty() {
        return Err(EdaError::Contract("ppo_update on an empty buffer".into()));
    }
    if buffer.advantages.len() != buffer.len() || buffer.returns.len() != buffer.len() {
        return Err(EdaError::Contract(
            "advantages must be computed before ppo_update".into(),
        ));
    }

    let snapshot = (model.params.clone(), adam.clone());
    let advantages = normalize_advantages(&buffer.advantages);

    let mut stats = UpdateStats::default();
    let mut indices: Vec<usize> = (0..buffer.len()).collect();
    for _ in 0..cfg.epochs_per_update {
        indices.shuffle(rng);
        for chunk in indices.chunks(cfg.minibatch_size) {
            let batch = MinibatchRefs {
                observations: chunk.iter().map(|&i| &buffer.observations[i]).collect(),
                actions: chunk.iter().map(|&i| buffer.actions[i]).collect(),
                log_probs_old: chunk.iter().map(|&i| buffer.log_probs[i]).collect(),
                advantages: chunk.iter().map(|&i| advantages[i]).collect(),
                returns: chunk.iter().map(|&i| buffer.returns[i]).collect(),
            };
            let mut tape = Tape::new();
            let eval = ppo_minibatch_loss(model, &model.params, &mut tape, &batch, cfg)?;
            let loss_value = tape.value(eval.loss).item();
            if !loss_value.is_finite() {
                model.params = snapshot.0;
                *adam = snapshot.1;
                return Err(EdaError::NonFiniteLoss);
            }

            stats.policy_loss += -eval.surrogate;
            stats.value_loss += eval.value_loss;
            stats.entropy += eval.entropy;
            stats.total_loss += loss_value;
            stats.mean_ratio += eval.ratios.iter().sum::<f64>() / eval.ratios.len() as f64;
            stats.clip_fraction += eval
                .ratios
                .iter()
                .filter(|r| (**r - 1.0).abs() > cfg.clip_epsilon)
                .count() as f64
                / eval.ratios.len() as f64;
            stats.minibatches += 1;

            tape.backward(eval.loss, &mut model.params)?;
            adam_step(&mut model.params, adam)?;
        }
    }

    let n = stats.minibatches.max(1) as f64;
    stats.policy_loss /= n;
    stats.value_loss /= n;
    stats.entropy /= n;
    stats.total_loss /= n;
    stats.mean_ratio /= n;
    stats.clip_fraction /= n;
    Ok(stats)
}
