//! Seeded training runs with incremental CSV logging and bit-exact
//! checkpoint/resume at rollout-update boundaries.

use std::collections::VecDeque;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use a3ps_core::blend::AlphaSchedule;
use a3ps_core::eda::{collect_rollout, compute_advantages, ppo_update, ActorCritic, NetConfig};
use a3ps_core::env::{Action, Env, Episode, GridState, RewardConfig, TerminalCause};
use a3ps_core::nn::{load_params, save_params, AdamConfig, AdamState, ParamSet, Tensor};

use crate::assets::Guidance;
use crate::report::{csv_row, parse_csv, EpisodeRow};
use crate::world::FroggerWorld;
use crate::{AgentMode, ExperimentConfig, HarnessError, Result};

const STATE_VERSION: u32 = 1;

/// Mutable run state persisted to `state.json` alongside the parameter and
/// optimizer checkpoints. JSON floats use shortest round-trip formatting,
/// so every f64 here survives the trip bit-for-bit.
#[derive(Serialize, Deserialize)]
struct TrainerState {
    version: u32,
    iteration: u32,
    episodes_flushed: u32,
    episode_index: u32,
    episode_reward: f64,
    episode_steps: u32,
    reached_goal: bool,
    env_state: GridState,
    history: Vec<GridState>,
    rollout_rng: ChaCha8Rng,
    shuffle_rng: ChaCha8Rng,
    adam_step: u64,
    /// Rewards of the last `window` flushed episodes, for the smoothed column.
    recent_rewards: VecDeque<f64>,
}

/// Result of a greedy evaluation rollout with the blend weight forced to 0.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GreedyEval {
    pub reached_goal: bool,
    pub reward: f64,
    pub steps: u32,
}

#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub seed_dir: PathBuf,
    /// Parsed back from the CSV, the single source of truth.
    pub rows: Vec<EpisodeRow>,
    pub completed: bool,
    /// Present only when the run reached its episode target.
    pub greedy: Option<GreedyEval>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub seeds: Vec<SeedOutcome>,
}

fn eda_only_schedule() -> AlphaSchedule {
    AlphaSchedule {
        alpha0: 0.0,
        decay_step: 0.0,
        decay_interval: 1,
        floor: 0.0,
    }
}

fn net_config(cfg: &ExperimentConfig, env: &Env) -> NetConfig {
    let mut net = NetConfig::new(env.frame_len(), cfg.env.rows)
        .with_sizes(cfg.net.embed_dim, cfg.net.hidden_dim);
    net.shared_encoder = cfg.net.shared_encoder;
    net
}

fn save_optimizer(adam: &AdamState, model: &ActorCritic, path: &Path) -> Result<()> {
    let mut set = ParamSet::new();
    for (i, p) in model.params.iter().enumerate() {
        set.add(format!("m.{}", p.name), adam.m[i].clone());
        set.add(format!("v.{}", p.name), adam.v[i].clone());
    }
    save_params(&set, path)?;
    Ok(())
}

fn load_optimizer(adam: &mut AdamState, model: &ActorCritic, path: &Path) -> Result<()> {
    let loaded = load_params(path)?;
    for (i, p) in model.params.iter().enumerate() {
        let read = |prefix: &str| -> Result<Tensor> {
            let name = format!("{prefix}.{}", p.name);
            let id = loaded.by_name(&name).ok_or_else(|| {
                HarnessError::Contract(format!("optimizer checkpoint missing {name}"))
            })?;
            Ok(loaded.get(id).value.clone())
        };
        adam.m[i] = read("m")?;
        adam.v[i] = read("v")?;
    }
    Ok(())
}

/// Trains one seed to the configured episode count, appending each finished
/// episode to `seed-<seed>/episodes.csv` as it completes. With `resume`,
/// picks up from the last checkpoint; `stop_after_iterations` ends the run
/// early at an update boundary (checkpointed, resumable).
pub fn run_seed(
    cfg: &ExperimentConfig,
    seed: u64,
    guidance: Option<&Guidance>,
    resume: bool,
    stop_after_iterations: Option<u32>,
) -> Result<SeedOutcome> {
    cfg.validate()?;
    if cfg.agent_mode == AgentMode::A3ps && guidance.is_none() {
        return Err(HarnessError::Config(
            "a3ps mode needs loaded guidance assets".into(),
        ));
    }

    let seed_dir = cfg.out_dir.join(format!("seed-{seed}"));
    std::fs::create_dir_all(&seed_dir)?;
    let csv_path = seed_dir.join("episodes.csv");
    let model_path = seed_dir.join("model.ckpt");
    let optim_path = seed_dir.join("optim.ckpt");
    let state_path = seed_dir.join("state.json");

    let env = Env::new(cfg.env.clone(), RewardConfig::for_mode(cfg.reward_mode))?;
    let net = net_config(cfg, &env);
    let schedule = match cfg.agent_mode {
        AgentMode::A3ps => cfg.alpha,
        AgentMode::Eda => eda_only_schedule(),
    };
    let guidance = match cfg.agent_mode {
        AgentMode::A3ps => guidance,
        AgentMode::Eda => None,
    };

    let mut world = FroggerWorld::new(env.clone(), schedule, guidance);
    let mut model;
    let mut adam;
    let mut rollout_rng;
    let mut shuffle_rng;
    let mut iteration;
    let mut episodes_flushed;
    let mut recent: VecDeque<f64>;
    let mut writer;

    let resuming = resume && state_path.exists();
    if resuming {
        let state: TrainerState = serde_json::from_str(&std::fs::read_to_string(&state_path)?)?;
        if state.version != STATE_VERSION {
            return Err(HarnessError::Config(format!(
                "unsupported trainer state version {}",
                state.version
            )));
        }
        model = ActorCritic::new(net, &mut ChaCha8Rng::seed_from_u64(0));
        model.load_params(&load_params(&model_path)?)?;
        adam = AdamState::new(AdamConfig::with_lr(cfg.ppo.learning_rate), &model.params);
        load_optimizer(&mut adam, &model, &optim_path)?;
        adam.step = state.adam_step;
        rollout_rng = state.rollout_rng;
        shuffle_rng = state.shuffle_rng;
        iteration = state.iteration;
        episodes_flushed = state.episodes_flushed;
        recent = state.recent_rewards;
        world.restore(
            state.episode_index,
            state.env_state,
            state.history,
            state.episode_reward,
            state.episode_steps,
            state.reached_goal,
        );
        writer = BufWriter::new(OpenOptions::new().append(true).open(&csv_path)?);
    } else {
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let init_seed = master.next_u64();
        let rollout_seed = master.next_u64();
        let shuffle_seed = master.next_u64();
        model = ActorCritic::new(net, &mut ChaCha8Rng::seed_from_u64(init_seed));
        adam = AdamState::new(AdamConfig::with_lr(cfg.ppo.learning_rate), &model.params);
        rollout_rng = ChaCha8Rng::seed_from_u64(rollout_seed);
        shuffle_rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
        iteration = 0;
        episodes_flushed = 0;
        recent = VecDeque::new();
        writer = BufWriter::new(File::create(&csv_path)?);
        writeln!(writer, "{}", crate::report::CSV_HEADER)?;
        writer.flush()?;
    }

    let save_checkpoint = |model: &ActorCritic,
                           adam: &AdamState,
                           world: &FroggerWorld<'_>,
                           rollout_rng: &ChaCha8Rng,
                           shuffle_rng: &ChaCha8Rng,
                           iteration: u32,
                           episodes_flushed: u32,
                           recent: &VecDeque<f64>|
     -> Result<()> {
        save_params(&model.params, &model_path)?;
        save_optimizer(adam, model, &optim_path)?;
        let (env_state, history, episode_reward, episode_steps, reached_goal) = world.snapshot();
        let state = TrainerState {
            version: STATE_VERSION,
            iteration,
            episodes_flushed,
            episode_index: world.episode_index(),
            episode_reward,
            episode_steps,
            reached_goal,
            env_state,
            history,
            rollout_rng: rollout_rng.clone(),
            shuffle_rng: shuffle_rng.clone(),
            adam_step: adam.step,
            recent_rewards: recent.clone(),
        };
        std::fs::write(&state_path, serde_json::to_string(&state)? + "\n")?;
        Ok(())
    };

    while episodes_flushed < cfg.episodes {
        if let Some(cap) = stop_after_iterations {
            if iteration >= cap {
                break;
            }
        }
        let mut buffer =
            collect_rollout(&mut world, &model, cfg.ppo.rollout_length, &mut rollout_rng)?;
        if cfg.reward_scale != 1.0 {
            for r in &mut buffer.rewards {
                *r /= cfg.reward_scale;
            }
        }
        compute_advantages(&mut buffer, &cfg.ppo);
        ppo_update(&mut model, &buffer, &cfg.ppo, &mut adam, &mut shuffle_rng)?;
        iteration += 1;

        for log in world.drain_completed() {
            if episodes_flushed >= cfg.episodes {
                break;
            }
            recent.push_back(log.reward);
            while recent.len() > cfg.smoothing_window {
                recent.pop_front();
            }
            let smoothed = recent.iter().sum::<f64>() / recent.len() as f64;
            writeln!(writer, "{}", csv_row(&log, smoothed))?;
            episodes_flushed += 1;
        }
        writer.flush()?;

        if let Some(every) = cfg.checkpoint_every {
            if every > 0 && iteration % every == 0 {
                save_checkpoint(
                    &model,
                    &adam,
                    &world,
                    &rollout_rng,
                    &shuffle_rng,
                    iteration,
                    episodes_flushed,
                    &recent,
                )?;
            }
        }
    }
    writer.flush()?;
    drop(writer);
    save_checkpoint(
        &model,
        &adam,
        &world,
        &rollout_rng,
        &shuffle_rng,
        iteration,
        episodes_flushed,
        &recent,
    )?;

    let completed = episodes_flushed >= cfg.episodes;
    let greedy = if completed {
        Some(greedy_rollout(&model, &env)?)
    } else {
        None
    };
    Ok(SeedOutcome {
        seed,
        rows: parse_csv(&csv_path)?,
        seed_dir,
        completed,
        greedy,
    })
}

/// Runs every configured seed sequentially. `resume` continues any seed
/// with a saved trainer state.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    guidance: Option<&Guidance>,
    resume: bool,
) -> Result<RunOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    cfg.save(&cfg.out_dir.join("run-config.json"))?;
    let mut seeds = Vec::new();
    for &seed in &cfg.seeds {
        seeds.push(run_seed(cfg, seed, guidance, resume, None)?);
    }
    Ok(RunOutcome {
        out_dir: cfg.out_dir.clone(),
        seeds,
    })
}

/// One deterministic episode under the trained policy alone: the advice
/// weight is zero and actions are greedy.
pub fn greedy_rollout(model: &ActorCritic, env: &Env) -> Result<GreedyEval> {
    let mut episode = Episode::start(env.clone(), 0);
    let mut reward = 0.0;
    let mut steps = 0u32;
    while !episode.is_terminal() {
        let eval = model.evaluate(&episode.observation())?;
        let mut best = 0;
        for i in 1..eval.probs.len() {
            if eval.probs[i] > eval.probs[best] {
                best = i;
            }
        }
        let action = Action::from_index(best).expect("argmax in range");
        let outcome = episode.step(action)?;
        reward += outcome.reward;
        steps += 1;
    }
    Ok(GreedyEval {
        reached_goal: episode.state().terminal == Some(TerminalCause::Goal),
        reward,
        steps,
    })
}
