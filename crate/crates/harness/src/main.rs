use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use a3ps_core::ada::{evaluate, AdaModel, AdaTrainConfig};
use a3ps_core::advice::{
    build_corpus, build_vocab, default_rules, load_corpus, save_corpus, Split,
};
use a3ps_core::env::{
    reachable_states, solve_oracle, Env, RewardConfig, RewardMode, ENUMERATION_CAP,
};
use a3ps_core::nn::load_params;

use a3ps_harness::{
    compare_runs, default_out_dir, emit_plotdata, load_guidance, load_run_dir, run_seed,
    train_ada_from_corpus, AgentMode, ExperimentConfig, ORACLE_HORIZON,
};

#[derive(Parser)]
#[command(
    name = "a3ps",
    about = "Advice-aided policy shaping on a Frogger gridworld: corpus tools, advice-agent training, and shaped-vs-baseline PPO experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Advice corpus tools.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
    /// Advice-agent training and evaluation.
    Ada {
        #[command(subcommand)]
        command: AdaCommand,
    },
    /// Train one experiment condition over its seeds.
    Run(RunArgs),
    /// Compare two finished run directories (A vs B).
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        /// Also write an aligned per-seed smoothed-reward table for external
        /// plotting tools.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Planning-oracle tools.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
}

#[derive(Args)]
struct ConfigArg {
    /// Experiment config file (JSON); flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        match &self.config {
            Some(path) => Ok(ExperimentConfig::load(path)
                .with_context(|| format!("reading config {}", path.display()))?),
            None => Ok(ExperimentConfig::default()),
        }
    }
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Generate a synthetic advice corpus from the planning oracle.
    Build {
        #[command(flatten)]
        config: ConfigArg,
        /// Output corpus path.
        #[arg(long, default_value = "corpus.jsonl")]
        out: PathBuf,
        /// Number of records to sample.
        #[arg(long, default_value_t = 1935)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print summary statistics of a corpus file.
    Inspect { path: PathBuf },
}

#[derive(Subcommand)]
enum AdaCommand {
    /// Train the advice agent on a corpus and write its checkpoint.
    Train {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        corpus: PathBuf,
        /// Checkpoint output path (a .json config sidecar is written too).
        #[arg(long, default_value = "ada.ckpt")]
        out: PathBuf,
        #[arg(long, default_value_t = 40)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long, default_value_t = 1e-3)]
        learning_rate: f64,
        #[arg(long, default_value_t = 8)]
        patience: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Evaluate a trained advice agent on a corpus split.
    Eval {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Which records to score: train, tune, or all.
        #[arg(long, default_value = "tune")]
        split: String,
    },
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Agent mode: eda (baseline) or a3ps (advice-shaped).
    #[arg(long, value_enum)]
    mode: Option<AgentMode>,
    /// Reward mode: dense or sparse.
    #[arg(long)]
    reward: Option<String>,
    #[arg(long)]
    episodes: Option<u32>,
    /// Seeds; repeat the flag for several.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Output directory (defaults to $A3PS_OUT_DIR or ./out, plus the mode).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Advice-agent checkpoint (required in a3ps mode).
    #[arg(long)]
    ada: Option<PathBuf>,
    /// Initial blend weight.
    #[arg(long)]
    alpha0: Option<f64>,
    /// Blend-weight decrement per decay step.
    #[arg(long = "alpha-decay")]
    alpha_decay: Option<f64>,
    /// Episodes between decay steps.
    #[arg(long = "alpha-interval")]
    alpha_interval: Option<u32>,
    /// Continue from per-seed checkpoints when present.
    #[arg(long)]
    resume: bool,
    /// Save a checkpoint every K rollout-update iterations.
    #[arg(long = "checkpoint-every")]
    checkpoint_every: Option<u32>,
    /// Stop each seed after K iterations (checkpointed; resume later).
    #[arg(long = "stop-after")]
    stop_after: Option<u32>,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Solve the configured level exhaustively and report on the policy.
    Solve {
        #[command(flatten)]
        config: ConfigArg,
        /// Reward mode to plan against.
        #[arg(long, default_value = "dense")]
        reward: String,
        #[arg(long, default_value_t = 0.99)]
        gamma: f64,
        /// Optional TSV dump of state values and greedy actions.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_reward(s: &str) -> anyhow::Result<RewardMode> {
    match s {
        "dense" => Ok(RewardMode::Dense),
        "sparse" => Ok(RewardMode::Sparse),
        other => bail!("unknown reward mode {other:?} (expected dense or sparse)"),
    }
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Corpus { command } => corpus_main(command),
        Command::Ada { command } => ada_main(command),
        Command::Run(args) => run_main(args),
        Command::Compare { dir_a, dir_b, plot } => {
            let a = load_run_dir(&dir_a)?;
            let b = load_run_dir(&dir_b)?;
            print!("{}", compare_runs(&a, &b)?);
            if let Some(path) = plot {
                let mut series = Vec::new();
                for run in [&a, &b] {
                    for (seed, rows) in &run.seeds {
                        series.push((
                            format!("{}-seed{}", run.name, seed),
                            rows.iter().map(|r| r.smoothed_reward).collect::<Vec<_>>(),
                        ));
                    }
                }
                emit_plotdata(&series, &path)?;
                println!("wrote plot data to {}", path.display());
            }
            Ok(())
        }
        Command::Oracle { command } => oracle_main(command),
    }
}

fn corpus_main(command: CorpusCommand) -> anyhow::Result<()> {
    match command {
        CorpusCommand::Build {
            config,
            out,
            n,
            seed,
        } => {
            let cfg = config.load()?;
            let env = Env::new(cfg.env.clone(), RewardConfig::dense())?;
            let oracle = solve_oracle(&env, cfg.oracle_gamma, ORACLE_HORIZON)?;
            let records = build_corpus(&env, &default_rules(), &oracle, n, seed)?;
            save_corpus(&records, &out)?;
            let train = records.iter().filter(|r| r.split == Split::Train).count();
            println!(
                "wrote {} records ({} train / {} tune) to {}",
                records.len(),
                train,
                records.len() - train,
                out.display()
            );
            Ok(())
        }
        CorpusCommand::Inspect { path } => {
            let records = load_corpus(&path)?;
            let vocab = build_vocab(&records);
            let train = records.iter().filter(|r| r.split == Split::Train).count();
            let mut label_counts = [0usize; 5];
            for r in &records {
                label_counts[r.label.index()] += 1;
            }
            println!(
                "records: {} ({} train / {} tune)",
                records.len(),
                train,
                records.len() - train
            );
            println!(
                "vocabulary: {} entries (including <pad> and <unk>)",
                vocab.len()
            );
            println!(
                "labels: up {} / down {} / left {} / right {} / noop {}",
                label_counts[0], label_counts[1], label_counts[2], label_counts[3], label_counts[4]
            );
            for r in records.iter().take(3) {
                println!("sample: [{}] {:?}", r.label, r.advice);
            }
            Ok(())
        }
    }
}

fn ada_main(command: AdaCommand) -> anyhow::Result<()> {
    match command {
        AdaCommand::Train {
            config,
            corpus,
            out,
            epochs,
            batch_size,
            learning_rate,
            patience,
            seed,
        } => {
            let cfg = config.load()?;
            let env = Env::new(cfg.env.clone(), RewardConfig::dense())?;
            let records = load_corpus(&corpus)?;
            let train_cfg = AdaTrainConfig {
                learning_rate,
                epochs,
                batch_size,
                patience,
            };
            let (report, model, vocab) =
                train_ada_from_corpus(&env, &records, None, &train_cfg, seed, &out)?;
            for m in &report.epochs {
                println!(
                    "epoch {:>3}: train loss {:.4} acc {:.3} | tune loss {:.4} acc {:.3}",
                    m.epoch, m.train_loss, m.train_accuracy, m.tune_loss, m.tune_accuracy
                );
            }
            println!(
                "kept epoch {} (tune loss {:.4}); {} parameters, vocab {} -> {}",
                report.best_epoch,
                report.best_tune_loss,
                model.params.len(),
                vocab.len(),
                out.display()
            );
            Ok(())
        }
        AdaCommand::Eval {
            config,
            corpus,
            checkpoint,
            split,
        } => {
            let cfg = config.load()?;
            let env = Env::new(cfg.env.clone(), RewardConfig::dense())?;
            let records = load_corpus(&corpus)?;
            let vocab = build_vocab(&records);
            let sidecar: a3ps_core::ada::AdaConfig = serde_json::from_str(
                &std::fs::read_to_string(format!("{}.json", checkpoint.display()))
                    .context("reading checkpoint config sidecar")?,
            )?;
            let mut model = AdaModel::new(sidecar, &mut ChaCha8Rng::seed_from_u64(0));
            model.load_params(&load_params(&checkpoint)?)?;
            let subset: Vec<_> = match split.as_str() {
                "train" => records
                    .iter()
                    .filter(|r| r.split == Split::Train)
                    .cloned()
                    .collect(),
                "tune" => records
                    .iter()
                    .filter(|r| r.split == Split::Tune)
                    .cloned()
                    .collect(),
                "all" => records.clone(),
                other => bail!("unknown split {other:?}"),
            };
            let report = evaluate(&model, &env, &subset, &vocab)?;
            println!(
                "{} split: {} records, accuracy {:.4}, mean loss {:.4}",
                split,
                subset.len(),
                report.accuracy,
                report.mean_loss
            );
            println!("confusion (rows = label, cols = prediction; order up/down/left/right/noop):");
            for row in report.confusion {
                println!(
                    "  {:>5} {:>5} {:>5} {:>5} {:>5}",
                    row[0], row[1], row[2], row[3], row[4]
                );
            }
            Ok(())
        }
    }
}

fn run_main(args: RunArgs) -> anyhow::Result<()> {
    let mut cfg = args.config.load()?;
    if let Some(mode) = args.mode {
        cfg.agent_mode = mode;
    }
    if let Some(reward) = &args.reward {
        cfg.reward_mode = parse_reward(reward)?;
    }
    if let Some(episodes) = args.episodes {
        cfg.episodes = episodes;
    }
    if !args.seeds.is_empty() {
        cfg.seeds = args.seeds.clone();
    }
    if let Some(corpus) = args.corpus {
        cfg.corpus_path = Some(corpus);
    }
    if let Some(ada) = args.ada {
        cfg.ada_checkpoint = Some(ada);
    }
    if let Some(alpha0) = args.alpha0 {
        cfg.alpha.alpha0 = alpha0;
    }
    if let Some(step) = args.alpha_decay {
        cfg.alpha.decay_step = step;
    }
    if let Some(interval) = args.alpha_interval {
        cfg.alpha.decay_interval = interval;
    }
    if let Some(every) = args.checkpoint_every {
        cfg.checkpoint_every = Some(every);
    }
    if let Some(dir) = args.out {
        cfg.out_dir = dir;
    } else if args.config.config.is_none() {
        cfg.out_dir = default_out_dir().join(format!(
            "{}-{}",
            cfg.agent_mode,
            match cfg.reward_mode {
                RewardMode::Dense => "dense",
                RewardMode::Sparse => "sparse",
            }
        ));
    }
    cfg.validate().map_err(anyhow::Error::from)?;

    std::fs::create_dir_all(&cfg.out_dir)?;
    cfg.save(&cfg.out_dir.join("run-config.json"))?;
    let guidance = match cfg.agent_mode {
        AgentMode::A3ps => Some(load_guidance(&cfg)?),
        AgentMode::Eda => None,
    };

    for &seed in &cfg.seeds.clone() {
        let outcome = run_seed(&cfg, seed, guidance.as_ref(), args.resume, args.stop_after)?;
        let episodes_done = outcome.rows.len();
        let goals = outcome.rows.iter().filter(|r| r.reached_goal).count();
        match outcome.greedy {
            Some(g) => println!(
                "seed {seed}: {episodes_done} episodes, {goals} goals; greedy eval: reward {:.1}, steps {}, goal {}",
                g.reward, g.steps, g.reached_goal
            ),
            None => println!("seed {seed}: stopped after {episodes_done} episodes (resumable)"),
        }
    }
    println!("run complete: {}", cfg.out_dir.display());
    Ok(())
}

fn oracle_main(command: OracleCommand) -> anyhow::Result<()> {
    match command {
        OracleCommand::Solve {
            config,
            reward,
            gamma,
            out,
        } => {
            let cfg = config.load()?;
            let reward = parse_reward(&reward)?;
            let env = Env::new(cfg.env.clone(), RewardConfig::for_mode(reward))?;
            let oracle = solve_oracle(&env, gamma, ORACLE_HORIZON)?;
            let (start, _) = env.reset(0);
            println!(
                "solved {} states (phase period {}); start-state value {:.4}",
                oracle.len(),
                oracle.phase_period(),
                oracle.value(&start).unwrap_or(f64::NAN)
            );
            let mut state = start;
            let mut steps = 0u32;
            let mut total = 0.0;
            while !state.is_terminal() && steps < cfg.env.max_steps {
                let action = oracle
                    .greedy(&state)
                    .context("oracle covers every live state")?;
                let outcome = env.step(&state, action)?;
                total += outcome.reward;
                state = outcome.next_state;
                steps += 1;
            }
            println!(
                "greedy rollout from start: {} steps, reward {:.1}, terminal {:?}",
                steps, total, state.terminal
            );
            if let Some(path) = out {
                let states = reachable_states(&env, ENUMERATION_CAP)?;
                let mut text = String::from("row\tcol\tmax_visited\tphase\taction\tvalue\n");
                for s in &states {
                    let key = oracle.key_of(&s.clone());
                    text.push_str(&format!(
                        "{}\t{}\t{}\t{}\t{}\t{}\n",
                        key.row,
                        key.col,
                        key.max_visited,
                        key.phase,
                        oracle.greedy(s).context("covered")?,
                        oracle.value(s).context("covered")?
                    ));
                }
                std::fs::write(&path, text)?;
                println!(
                    "wrote {} reachable states to {}",
                    states.len(),
                    path.display()
                );
            }
            Ok(())
        }
    }
}
