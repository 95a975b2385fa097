//! Advice generation and corpus tooling.
//!
//! A rule table maps ground-truth world features to short natural-language
//! utterances in the register of the game's human advice ("move forward path
//! is clear"), labeled with the planning oracle's greedy action. The same
//! module owns the text preprocessing pipeline and the line-delimited corpus
//! format, which also accepts externally collected human advice.

mod corpus;
mod preprocess;
mod templates;

pub use corpus::{
    build_corpus, build_vocab, load_corpus, save_corpus, AdviceRecord, Split, Vocabulary,
    PAD_INDEX, UNK_INDEX,
};
pub use preprocess::{is_stopword, preprocess, STOPWORDS};
pub use templates::{default_rules, generate_advice, Condition, Side, TemplateRule};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdviceError {
    #[error("no template rule covers state {0}")]
    Coverage(String),
    #[error("oracle has no entry for state {0}")]
    OracleMiss(String),
    #[error("corpus of {requested} records exceeds the {available} distinct reachable states")]
    Capacity { requested: usize, available: usize },
    #[error("corpus parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("vocabulary is frozen; cannot insert {0:?}")]
    Frozen(String),
    #[error(transparent)]
    Env(#[from] crate::env::EnvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AdviceError>;
