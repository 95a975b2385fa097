use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::AdaModel;
use super::{AdaError, Result};
use crate::advice::{AdviceRecord, Split, Vocabulary};
use crate::env::{Action, Env};
use crate::nn::{adam_step, AdamConfig, AdamState, ParamSet, Tape};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdaTrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs without a tune-loss improvement before stopping early.
    pub patience: usize,
}

impl Default for AdaTrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 40,
            batch_size: 32,
            patience: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub tune_loss: f64,
    pub tune_accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub best_tune_loss: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub mean_loss: f64,
    /// `confusion[label][predicted]` record counts.
    pub confusion: [[usize; Action::COUNT]; Action::COUNT],
}

struct Encoded {
    features: Vec<f64>,
    tokens: Vec<usize>,
    label: usize,
}

fn encode<'a>(
    env: &Env,
    vocab: &Vocabulary,
    records: impl Iterator<Item = &'a AdviceRecord>,
) -> Vec<Encoded> {
    records
        .map(|r| Encoded {
            features: env.frame(&r.state),
            tokens: vocab.encode(&r.tokens),
            label: r.label.index(),
        })
        .collect()
}

fn eval_encoded(model: &AdaModel, params: &ParamSet, data: &[Encoded]) -> Result<(f64, f64)> {
    let mut correct = 0usize;
    let mut loss = 0.0;
    for item in data {
        let mut tape = Tape::new();
        let logits = model.forward_with(params, &mut tape, &item.features, &item.tokens)?;
        let ce = tape
            .cross_entropy(logits, &[item.label])
            .map_err(AdaError::Nn)?;
        loss += tape.value(ce).item();
        let row = tape.value(logits).values();
        let pred = argmax(row);
        if pred == item.label {
            correct += 1;
        }
    }
    let n = data.len().max(1) as f64;
    Ok((loss / n, correct as f64 / n))
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..row.len() {
        if row[i] > row[best] {
            best = i;
        }
    }
    best
}

/// Cross-entropy training on the train split with per-epoch accuracy
/// reporting; the parameters with the best tune loss are retained.
pub fn train_supervised<R: Rng>(
    model: &mut AdaModel,
    env: &Env,
    records: &[AdviceRecord],
    vocab: &Vocabulary,
    cfg: &AdaTrainConfig,
    rng: &mut R,
) -> Result<TrainReport> {
    let train = encode(
        env,
        vocab,
        records.iter().filter(|r| r.split == Split::Train),
    );
    let tune = encode(
        env,
        vocab,
        records.iter().filter(|r| r.split == Split::Tune),
    );
    if train.is_empty() || tune.is_empty() {
        return Err(AdaError::Contract(format!(
            "both splits must be non-empty (train {}, tune {})",
            train.len(),
            tune.len()
        )));
    }

    let mut adam = AdamState::new(AdamConfig::with_lr(cfg.learning_rate), &model.params);
    let mut report = TrainReport {
        epochs: Vec::new(),
        best_epoch: 0,
        best_tune_loss: f64::INFINITY,
    };
    let mut best_params = model.params.clone();
    let mut since_best = 0usize;

    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let mut tape = Tape::new();
            let mut batch_loss = None;
            for &i in chunk {
                let item = &train[i];
                let logits = model.forward(&mut tape, &item.features, &item.tokens)?;
                let ce = tape
                    .cross_entropy(logits, &[item.label])
                    .map_err(AdaError::Nn)?;
                batch_loss = Some(match batch_loss {
                    None => ce,
                    Some(acc) => tape.add(acc, ce).map_err(AdaError::Nn)?,
                });
            }
            let total = batch_loss.expect("chunks are non-empty");
            let mean = tape.affine_scalar(total, 1.0 / chunk.len() as f64, 0.0);
            tape.backward(mean, &mut model.params)
                .map_err(AdaError::Nn)?;
            adam_step(&mut model.params, &mut adam).map_err(AdaError::Nn)?;
        }

        let (train_loss, train_accuracy) = eval_encoded(model, &model.params, &train)?;
        let (tune_loss, tune_accuracy) = eval_encoded(model, &model.params, &tune)?;
        report.epochs.push(EpochMetrics {
            epoch,
            train_loss,
            train_accuracy,
            tune_loss,
            tune_accuracy,
        });

        if tune_loss < report.best_tune_loss {
            report.best_tune_loss = tune_loss;
            report.best_epoch = epoch;
            best_params = model.params.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.patience {
                break;
            }
        }
    }

    model.params = best_params;
    Ok(report)
}

/// Accuracy and confusion counts over one record set.
pub fn evaluate(
    model: &AdaModel,
    env: &Env,
    records: &[AdviceRecord],
    vocab: &Vocabulary,
) -> Result<EvalReport> {
    let data = encode(env, vocab, records.iter());
    let mut confusion = [[0usize; Action::COUNT]; Action::COUNT];
    let mut loss = 0.0;
    let mut correct = 0usize;
    for item in &data {
        let mut tape = Tape::new();
        let logits = model.forward(&mut tape, &item.features, &item.tokens)?;
        let ce = tape
            .cross_entropy(logits, &[item.label])
            .map_err(AdaError::Nn)?;
        loss += tape.value(ce).item();
        let pred = argmax(tape.value(logits).values());
        confusion[item.label][pred] += 1;
        if pred == item.label {
            correct += 1;
        }
    }
    let n = data.len().max(1) as f64;
    Ok(EvalReport {
        accuracy: correct as f64 / n,
        mean_loss: loss / n,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::super::model::AdaConfig;
    use super::*;
    use crate::advice::{build_vocab, default_rules, generate_advice};
    use crate::env::{reachable_states, solve_oracle, EnvConfig, RewardConfig, ENUMERATION_CAP};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_corpus(n: usize) -> (Env, Vec<AdviceRecord>) {
        let env = Env::new(EnvConfig::default(), RewardConfig::dense()).unwrap();
        let oracle = solve_oracle(&env, 0.99, 10_000).unwrap();
        let states = reachable_states(&env, ENUMERATION_CAP).unwrap();
        let rules = default_rules();
        let mut records: Vec<AdviceRecord> = states
            .iter()
            .step_by(states.len() / n.max(1))
            .take(n)
            .map(|s| generate_advice(s, &env.config, &rules, &oracle).unwrap())
            .collect();
        // last fifth becomes the tune split
        let cut = records.len() - records.len() / 5;
        for r in records.iter_mut().skip(cut) {
            r.split = Split::Tune;
        }
        (env, records)
    }

    #[test]
    fn twenty_record_corpus_is_memorized() {
        let (env, records) = toy_corpus(25);
        let vocab = build_vocab(&records);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let config = AdaConfig {
            embed_dim: 8,
            text_hidden: 16,
            state_hidden: 16,
            fusion_hidden: 16,
            ..AdaConfig::new(env.frame_len(), vocab.len())
        };
        let mut model = AdaModel::new(config, &mut rng);
        let cfg = AdaTrainConfig {
            epochs: 500,
            batch_size: 8,
            patience: 500,
            ..AdaTrainConfig::default()
        };
        let report = train_supervised(&mut model, &env, &records, &vocab, &cfg, &mut rng).unwrap();
        let best = report
            .epochs
            .iter()
            .map(|e| e.train_accuracy)
            .fold(0.0f64, f64::max);
        assert!(best >= 0.95, "train accuracy only reached {best}");
    }

    #[test]
    fn training_is_deterministic_given_a_seed() {
        let (env, records) = toy_corpus(30);
        let vocab = build_vocab(&records);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let config = AdaConfig {
                embed_dim: 4,
                text_hidden: 8,
                state_hidden: 8,
                fusion_hidden: 8,
                ..AdaConfig::new(env.frame_len(), vocab.len())
            };
            let mut model = AdaModel::new(config, &mut rng);
            let cfg = AdaTrainConfig {
                epochs: 4,
                batch_size: 8,
                patience: 10,
                ..AdaTrainConfig::default()
            };
            let report =
                train_supervised(&mut model, &env, &records, &vocab, &cfg, &mut rng).unwrap();
            let trace: Vec<(u64, u64)> = report
                .epochs
                .iter()
                .map(|e| (e.train_loss.to_bits(), e.tune_loss.to_bits()))
                .collect();
            (trace, model.params.checksum())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn empty_splits_are_contract_errors() {
        let (env, mut records) = toy_corpus(10);
        let vocab = build_vocab(&records);
        for r in records.iter_mut() {
            r.split = Split::Train;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut model = AdaModel::new(AdaConfig::new(env.frame_len(), vocab.len()), &mut rng);
        let err = train_supervised(
            &mut model,
            &env,
            &records,
            &vocab,
            &AdaTrainConfig::default(),
            &mut rng,
        );
        assert!(matches!(err, Err(AdaError::Contract(_))));
    }

    #[test]
    fn evaluation_reports_consistent_confusion_counts() {
        let (env, records) = toy_corpus(40);
        let vocab = build_vocab(&records);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let config = AdaConfig {
            embed_dim: 4,
            text_hidden: 8,
            state_hidden: 8,
            fusion_hidden: 8,
            ..AdaConfig::new(env.frame_len(), vocab.len())
        };
        let model = AdaModel::new(config, &mut rng);
        let report = evaluate(&model, &env, &records, &vocab).unwrap();
        let mut per_label = [0usize; Action::COUNT];
        for r in &records {
            per_label[r.label.index()] += 1;
        }
        for (label, row) in report.confusion.iter().enumerate() {
            assert_eq!(row.iter().sum::<usize>(), per_label[label]);
        }
        let diag: usize = (0..Action::COUNT).map(|i| report.confusion[i][i]).sum();
        assert!((report.accuracy - diag as f64 / records.len() as f64).abs() < 1e-12);
    }
}
