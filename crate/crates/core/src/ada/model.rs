use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Result;
use crate::advice::PAD_INDEX;
use crate::blend::ActionScores;
use crate::env::Action;
use crate::nn::{Affine, Embedding, GruCell, ParamSet, Tape, Tensor, TracedTensor};

/// Network sizes for the advice classifier.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdaConfig {
    /// Flattened feature-frame length of the environment it reads.
    pub frame_dim: usize,
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub text_hidden: usize,
    pub state_hidden: usize,
    pub fusion_hidden: usize,
}

impl AdaConfig {
    pub fn new(frame_dim: usize, vocab_size: usize) -> Self {
        Self {
            frame_dim,
            vocab_size,
            embed_dim: 32,
            text_hidden: 64,
            state_hidden: 64,
            fusion_hidden: 64,
        }
    }
}

/// State encoder, token embedding, recurrent text encoder, and the fusion
/// stack. The output head starts zeroed, so an untrained model scores every
/// action identically.
pub struct AdaModel {
    pub config: AdaConfig,
    pub params: ParamSet,
    state_enc: Affine,
    embedding: Embedding,
    text_rnn: GruCell,
    fusion: Affine,
    head: Affine,
}

impl AdaModel {
    pub fn new<R: Rng>(config: AdaConfig, rng: &mut R) -> Self {
        let mut params = ParamSet::new();
        let state_enc = Affine::new(
            &mut params,
            "state_enc",
            config.frame_dim,
            config.state_hidden,
            rng,
        );
        let embedding = Embedding::new(
            &mut params,
            "tok_emb",
            config.vocab_size,
            config.embed_dim,
            rng,
        );
        let text_rnn = GruCell::new(
            &mut params,
            "text_rnn",
            config.embed_dim,
            config.text_hidden,
            rng,
        );
        let fusion = Affine::new(
            &mut params,
            "fusion",
            config.state_hidden + config.text_hidden,
            config.fusion_hidden,
            rng,
        );
        let head = Affine::new_zeroed(&mut params, "head", config.fusion_hidden, Action::COUNT);
        Self {
            config,
            params,
            state_enc,
            embedding,
            text_rnn,
            fusion,
            head,
        }
    }

    /// Replaces parameter values with a checkpointed set, matched by name.
    pub fn load_params(&mut self, loaded: &ParamSet) -> Result<()> {
        for p in self.params.iter_mut() {
            let id = loaded.by_name(&p.name).ok_or_else(|| {
                super::AdaError::Contract(format!("checkpoint is missing parameter {}", p.name))
            })?;
            let source = loaded.get(id);
            if source.value.shape() != p.value.shape() {
                return Err(super::AdaError::Contract(format!(
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

    /// Builds the (1 x 5) logits node for one (state features, token ids)
    /// pair on the tape. Empty advice encodes as a single padding step.
    pub fn forward_with(
        &self,
        params: &ParamSet,
        tape: &mut Tape,
        state_features: &[f64],
        tokens: &[usize],
    ) -> Result<TracedTensor> {
        if state_features.len() != self.config.frame_dim {
            return Err(super::AdaError::Contract(format!(
                "state features have length {}, expected {}",
                state_features.len(),
                self.config.frame_dim
            )));
        }
        let x = tape.constant(Tensor::from_raw(
            vec![1, self.config.frame_dim],
            state_features.to_vec(),
        ));
        let s = self.state_enc.forward(tape, params, x)?;
        let s = tape.relu(s);

        let padded = [PAD_INDEX];
        let ids: &[usize] = if tokens.is_empty() { &padded } else { tokens };
        let mut steps = Vec::with_capacity(ids.len());
        for &id in ids {
            if id >= self.config.vocab_size {
                return Err(super::AdaError::Contract(format!(
                    "token id {id} outside vocabulary of {}",
                    self.config.vocab_size
                )));
            }
            steps.push(self.embedding.forward(tape, params, &[id])?);
        }
        let h = self.text_rnn.run(tape, params, &steps)?;

        let fused = tape.concat_cols(s, h)?;
        let f = self.fusion.forward(tape, params, fused)?;
        let f = tape.relu(f);
        Ok(self.head.forward(tape, params, f)?)
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        state_features: &[f64],
        tokens: &[usize],
    ) -> Result<TracedTensor> {
        self.forward_with(&self.params, tape, state_features, tokens)
    }

    /// The five raw action scores for one input pair.
    pub fn action_scores(&self, state_features: &[f64], tokens: &[usize]) -> Result<ActionScores> {
        let mut tape = Tape::new();
        let logits = self.forward(&mut tape, state_features, tokens)?;
        let mut out = [0.0; Action::COUNT];
        out.copy_from_slice(tape.value(logits).values());
        Ok(out)
    }
}
