//! Corpus records, the train/tune split, the vocabulary, and the
//! line-delimited corpus file format.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::preprocess::preprocess;
use super::templates::{generate_advice, TemplateRule};
use super::{AdviceError, Result};
use crate::env::{reachable_states, Action, Env, GridState, OracleTable, ENUMERATION_CAP};

pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;

const FILE_HEADER: &str = "a3ps-corpus v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Tune,
}

/// One corpus unit: a state snapshot, the advised action, and the utterance.
/// `tokens` always equals `preprocess(advice)`; it is rebuilt on load rather
/// than stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdviceRecord {
    pub state: GridState,
    #[serde(rename = "action")]
    pub label: Action,
    pub advice: String,
    #[serde(skip, default)]
    pub tokens: Vec<String>,
    pub split: Split,
}

/// Token-to-index map with reserved padding and unknown entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
    frozen: bool,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        Self {
            index: HashMap::new(),
            tokens: vec!["<pad>".into(), "<unk>".into()],
            frozen: false,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // PAD and UNK always exist
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn insert(&mut self, token: &str) -> Result<usize> {
        if let Some(&i) = self.index.get(token) {
            return Ok(i);
        }
        if self.frozen {
            return Err(AdviceError::Frozen(token.to_owned()));
        }
        let i = self.tokens.len();
        self.tokens.push(token.to_owned());
        self.index.insert(token.to_owned(), i);
        Ok(i)
    }

    /// Index of a token, UNK when absent.
    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_INDEX)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.lookup(t)).collect()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }
}

/// Builds a frozen vocabulary covering every token of the train split, in
/// first-seen order.
pub fn build_vocab(records: &[AdviceRecord]) -> Vocabulary {
    let mut vocab = Vocabulary::new();
    for record in records.iter().filter(|r| r.split == Split::Train) {
        for token in &record.tokens {
            vocab
                .insert(token)
                .expect("vocabulary is not frozen during build");
        }
    }
    vocab.freeze();
    vocab
}

/// Samples `n` distinct reachable states uniformly, generates advice for
/// each, and attaches a 90/10 train/tune split. Deterministic in
/// (env, rules, n, seed).
pub fn build_corpus(
    env: &Env,
    rules: &[TemplateRule],
    oracle: &OracleTable,
    n: usize,
    seed: u64,
) -> Result<Vec<AdviceRecord>> {
    let states = reachable_states(env, ENUMERATION_CAP)?;
    if n > states.len() {
        return Err(AdviceError::Capacity {
            requested: n,
            available: states.len(),
        });
    }
    let mut order: Vec<usize> = (0..states.len()).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let train_count = (n as f64 * 0.9).round() as usize;
    let mut records = Vec::with_capacity(n);
    for (k, &i) in order.iter().take(n).enumerate() {
        let mut record = generate_advice(&states[i], &env.config, rules, oracle)?;
        record.split = if k < train_count {
            Split::Train
        } else {
            Split::Tune
        };
        records.push(record);
    }
    Ok(records)
}

/// Writes the corpus as a version header line followed by one JSON record
/// per line, UTF-8, LF endings.
pub fn save_corpus(records: &[AdviceRecord], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{FILE_HEADER}")?;
    for record in records {
        let line = serde_json::to_string(record).map_err(|e| AdviceError::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a corpus file, rebuilding each record's tokens from its advice.
pub fn load_corpus(path: &Path) -> Result<Vec<AdviceRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or(AdviceError::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let header = header?;
    if header.trim() != FILE_HEADER {
        return Err(AdviceError::Parse {
            line: 1,
            message: format!("expected header {FILE_HEADER:?}, got {header:?}"),
        });
    }

    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut record: AdviceRecord =
            serde_json::from_str(&line).map_err(|e| AdviceError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        record.tokens = preprocess(&record.advice);
        records.push(record);
    }
    Ok(records)
}
