//! The advice-driven agent: a supervised classifier fusing a state-feature
//! encoding with a recurrent encoding of the advice tokens into five action
//! scores. Pretrained on the advice corpus, then frozen while the
//! experience agent trains.

mod model;
mod train;

pub use model::{AdaConfig, AdaModel};
pub use train::{
    evaluate, train_supervised, AdaTrainConfig, EpochMetrics, EvalReport, TrainReport,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdaError {
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, AdaError>;
