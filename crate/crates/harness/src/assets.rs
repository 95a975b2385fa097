//! Loading and producing the advice-side assets a shaped run depends on:
//! the corpus, the vocabulary rebuilt from its train split, the frozen
//! advice model, and the planning oracle.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use a3ps_core::ada::{train_supervised, AdaConfig, AdaModel, AdaTrainConfig, TrainReport};
use a3ps_core::advice::{
    build_vocab, default_rules, load_corpus, AdviceRecord, TemplateRule, Vocabulary,
};
use a3ps_core::env::{solve_oracle, Env, OracleTable, RewardConfig};
use a3ps_core::nn::{load_params, save_params};

use crate::{ExperimentConfig, HarnessError, Result};

/// Everything the shaped behavior policy consults at each rollout step.
pub struct Guidance {
    pub ada: AdaModel,
    pub oracle: OracleTable,
    pub rules: Vec<TemplateRule>,
    pub vocab: Vocabulary,
}

/// Sweeps cap handed to the oracle solver.
pub const ORACLE_HORIZON: usize = 20_000;

/// The advice-model recipe the desk experiments use. Training stops after a
/// few epochs on purpose: the scores stay soft enough that sampled blends
/// make occasional mistakes, and those mistakes are the contrast the
/// experience agent's updates learn from.
pub fn desk_ada_train_config() -> AdaTrainConfig {
    AdaTrainConfig {
        learning_rate: 1e-3,
        epochs: 6,
        batch_size: 32,
        patience: 8,
    }
}

/// Rebuilds the vocabulary from a corpus file and loads the frozen advice
/// model the checkpoint (with its JSON config sidecar) describes. The
/// oracle that labels runtime advice always plans against dense rewards:
/// advice reflects knowledge of good play, not of the active reward shape.
pub fn load_guidance(cfg: &ExperimentConfig) -> Result<Guidance> {
    let corpus_path = cfg
        .corpus_path
        .as_ref()
        .ok_or_else(|| HarnessError::Config("corpus_path is not set".into()))?;
    let ckpt_path = cfg
        .ada_checkpoint
        .as_ref()
        .ok_or_else(|| HarnessError::Config("ada_checkpoint is not set".into()))?;
    if !ckpt_path.exists() {
        return Err(HarnessError::MissingFile(ckpt_path.clone()));
    }

    let records = load_corpus(corpus_path)?;
    let vocab = build_vocab(&records);

    let ada_config = load_ada_config(ckpt_path)?;
    if ada_config.vocab_size != vocab.len() {
        return Err(HarnessError::Config(format!(
            "checkpoint vocabulary size {} does not match the corpus ({})",
            ada_config.vocab_size,
            vocab.len()
        )));
    }
    let mut ada = AdaModel::new(ada_config, &mut ChaCha8Rng::seed_from_u64(0));
    ada.load_params(&load_params(ckpt_path)?)?;

    let planning_env = Env::new(cfg.env.clone(), RewardConfig::dense())?;
    let oracle = solve_oracle(&planning_env, cfg.oracle_gamma, ORACLE_HORIZON)?;

    Ok(Guidance {
        ada,
        oracle,
        rules: default_rules(),
        vocab,
    })
}

fn sidecar_path(ckpt: &Path) -> std::path::PathBuf {
    let mut s = ckpt.as_os_str().to_owned();
    s.push(".json");
    std::path::PathBuf::from(s)
}

fn load_ada_config(ckpt: &Path) -> Result<AdaConfig> {
    let path = sidecar_path(ckpt);
    let text = std::fs::read_to_string(&path).map_err(|_| HarnessError::MissingFile(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Trains the advice model on a corpus and writes the checkpoint plus its
/// config sidecar. Returns the per-epoch metrics.
pub fn train_ada_from_corpus(
    env: &Env,
    records: &[AdviceRecord],
    sizes: Option<AdaConfig>,
    train_cfg: &AdaTrainConfig,
    seed: u64,
    out: &Path,
) -> Result<(TrainReport, AdaModel, Vocabulary)> {
    let vocab = build_vocab(records);
    let config = match sizes {
        Some(mut c) => {
            c.frame_dim = env.frame_len();
            c.vocab_size = vocab.len();
            c
        }
        None => AdaConfig::new(env.frame_len(), vocab.len()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = AdaModel::new(config, &mut rng);
    let report = train_supervised(&mut model, env, records, &vocab, train_cfg, &mut rng)?;

    save_params(&model.params, out)?;
    let sidecar = sidecar_path(out);
    std::fs::write(
        &sidecar,
        serde_json::to_string_pretty(&model.config)? + "\n",
    )?;
    Ok((report, model, vocab))
}
