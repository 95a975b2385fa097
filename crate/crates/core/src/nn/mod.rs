//! Minimal dense-tensor math with reverse-mode automatic differentiation.
//!
//! Everything the two agents need and nothing more: row-major `f64` tensors,
//! a [`Tape`] that records forward ops and replays them backwards, the layers
//! used by the actor-critic and the advice classifier (affine, ReLU, embedding
//! lookup, a gated recurrent cell, softmax, cross-entropy), the Adam
//! optimizer, and a finite-difference gradient checker.

mod adam;
mod checkpoint;
mod gradcheck;
mod layers;
mod params;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_params, save_params};
pub use gradcheck::gradient_check;
pub use layers::{Affine, Embedding, GruCell, PatchAffine};
pub use params::{ParamId, ParamSet, Parameter};
pub use tape::{Tape, TracedTensor};
pub use tensor::{log_softmax_slice, softmax_slice, Tensor};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch in {op}: lhs {lhs:?}, rhs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NnError>;
