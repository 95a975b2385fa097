//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers (visible with `cargo test -- --nocapture`).
//!
//! The first seven criteria are fast algebra/contract checks; 8 and 9 run
//! the full desk-scale experiment pipeline (corpus, advice-agent training,
//! three-seed PPO runs per condition); 10 exercises byte-exact determinism
//! and checkpoint resume.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use a3ps_core::ada::{evaluate, train_supervised, AdaConfig, AdaModel, AdaTrainConfig};
use a3ps_core::advice::{
    build_corpus, build_vocab, default_rules, generate_advice, preprocess, save_corpus,
    AdviceRecord, Split,
};
use a3ps_core::blend::{blend, select_action, AlphaSchedule, SelectMode};
use a3ps_core::eda::{
    collect_rollout, normalize_advantages, policy_ratios, ppo_minibatch_loss, ActorCritic,
    MinibatchRefs, NetConfig, PpoConfig,
};
use a3ps_core::env::{
    reachable_states, solve_oracle, Action, Env, EnvConfig, Event, Observation, RewardConfig,
    RewardMode, ENUMERATION_CAP,
};
use a3ps_core::nn::{gradient_check, softmax_slice, Affine, GruCell, ParamSet, Tape, Tensor};

use a3ps_harness::{
    desk_ada_train_config, load_guidance, run_seed, train_ada_from_corpus, AgentMode,
    ExperimentConfig, FroggerWorld, CSV_HEADER, ORACLE_HORIZON,
};

fn pass(criterion: u32, what: &str, detail: String) {
    println!("acceptance {criterion:02} ({what}): PASS — {detail}");
}

// ---------------------------------------------------------------- criterion 1

#[test]
fn acceptance_01_reward_table_conformance() {
    let dense = RewardConfig::dense();
    let sparse = RewardConfig::sparse();

    // every clause of the reward table, bit-exact
    assert_eq!(dense.value_of(&Event::ReachedGoal), 400.0);
    assert_eq!(dense.value_of(&Event::ReachedRowFirstTime(2)), 10.0);
    assert_eq!(dense.value_of(&Event::ReachedRowFirstTime(3)), 0.0);
    assert_eq!(dense.value_of(&Event::PassedTunnel), 100.0);
    assert_eq!(dense.value_of(&Event::LevelUp), 1.0);
    assert_eq!(dense.value_of(&Event::Waited { at_start: true }), -5.0);
    assert_eq!(dense.value_of(&Event::Waited { at_start: false }), -1.0);
    assert_eq!(dense.value_of(&Event::BlockedBySide), -2.0);
    assert_eq!(dense.value_of(&Event::BlockedByTunnel), -2.0);
    assert_eq!(dense.value_of(&Event::Collision), -20.0);
    for event in [
        Event::ReachedRowFirstTime(2),
        Event::PassedTunnel,
        Event::LevelUp,
        Event::Waited { at_start: true },
        Event::Waited { at_start: false },
        Event::BlockedBySide,
        Event::BlockedByTunnel,
    ] {
        assert_eq!(sparse.value_of(&event), 0.0, "sparse zeroes {event:?}");
    }
    assert_eq!(sparse.value_of(&Event::ReachedGoal), 400.0);
    assert_eq!(sparse.value_of(&Event::Collision), -20.0);

    // canonical transitions on a car-free level, both modes
    let no_cars = EnvConfig {
        lanes: vec![],
        ..EnvConfig::default()
    };
    let env = Env::new(no_cars.clone(), dense).unwrap();
    let (start, _) = env.reset(0);
    assert_eq!(env.step(&start, Action::NoOp).unwrap().reward, -5.0);
    assert_eq!(env.step(&start, Action::Down).unwrap().reward, -2.0);
    let up1 = env.step(&start, Action::Up).unwrap();
    assert_eq!(up1.reward, 1.0);
    let up2 = env.step(&up1.next_state, Action::Up).unwrap();
    assert_eq!(up2.reward, 11.0); // +10 first visit of row 2, +1 level up
    assert_eq!(
        env.step(&up2.next_state, Action::NoOp).unwrap().reward,
        -1.0
    );
    let mut s = up2.next_state;
    let tunnel = env
        .step(&env.step(&s, Action::Up).unwrap().next_state, Action::Up)
        .unwrap();
    assert_eq!(tunnel.reward, 101.0); // +100 tunnel pass, +1 level up
    s = tunnel.next_state;
    for _ in 0..3 {
        s = env.step(&s, Action::Up).unwrap().next_state;
    }
    let goal = env.step(&s, Action::Up).unwrap();
    assert_eq!(goal.reward, 401.0); // +400 goal, +1 level up
    assert!(goal.terminal);

    let sparse_env = Env::new(no_cars, RewardConfig::sparse()).unwrap();
    let (start, _) = sparse_env.reset(0);
    assert_eq!(sparse_env.step(&start, Action::NoOp).unwrap().reward, 0.0);
    assert_eq!(sparse_env.step(&start, Action::Up).unwrap().reward, 0.0);
    let mut s = start;
    for _ in 0..8 {
        s = sparse_env.step(&s, Action::Up).unwrap().next_state;
    }
    assert!(s.is_terminal());

    // collision terminates at exactly -20 in both modes
    let one_car = EnvConfig {
        lanes: vec![a3ps_core::env::CarLane {
            row: 1,
            dir: a3ps_core::env::LaneDir::Right,
            period: 1,
            offsets: vec![3],
        }],
        ..EnvConfig::default()
    };
    for reward in [RewardConfig::dense(), RewardConfig::sparse()] {
        let env = Env::new(one_car.clone(), reward).unwrap();
        let (start, _) = env.reset(0);
        let hit = env.step(&start, Action::Up).unwrap();
        assert_eq!(hit.reward, -20.0);
        assert!(hit.terminal);
    }

    pass(
        1,
        "reward-table conformance",
        "all clauses bit-exact in dense and sparse modes".into(),
    );
}

// ---------------------------------------------------------------- criterion 2

#[test]
fn acceptance_02_blend_algebra() {
    let adv = [2.5, -1.0, 0.25, 0.0, 3.0];
    let exp = [-4.0, 2.0, 1.0, 0.5, -1.5];

    // exact reductions at the endpoints
    let softmax5 = |v: &[f64; 5]| {
        let mut s = *v;
        softmax_slice(&mut s);
        s
    };
    assert_eq!(blend(&adv, &exp, 1.0).unwrap(), softmax5(&adv));
    assert_eq!(blend(&adv, &exp, 0.0).unwrap(), softmax5(&exp));

    // symmetry case
    let a = [2.0, 0.0, 0.0, 0.0, 0.0];
    let b = [0.0, 2.0, 0.0, 0.0, 0.0];
    let p = blend(&a, &b, 0.5).unwrap();
    assert!((p[0] - p[1]).abs() < 1e-15);

    // shift invariance within 1e-9 and distribution validity within 1e-12
    let mut worst_shift = 0.0f64;
    let mut worst_sum = 0.0f64;
    for k in 0..200 {
        let t = k as f64 * 0.37;
        let adv = [
            t.sin() * 10.0,
            t.cos() * 8.0,
            (t * 1.7).sin() * 5.0,
            -t.sin() * 3.0,
            1.0,
        ];
        let exp = [
            (t * 0.7).cos() * 6.0,
            -2.0,
            (t * 2.3).sin() * 9.0,
            0.25,
            -t.cos(),
        ];
        let alpha = (k % 11) as f64 / 10.0;
        let shift = (t * 3.1).sin() * 40.0;
        let p = blend(&adv, &exp, alpha).unwrap();
        let q = blend(&adv.map(|v| v + shift), &exp.map(|v| v + shift), alpha).unwrap();
        for (x, y) in p.iter().zip(&q) {
            worst_shift = worst_shift.max((x - y).abs());
        }
        worst_sum = worst_sum.max((p.iter().sum::<f64>() - 1.0).abs());
        assert!(p.iter().all(|v| *v >= 0.0));
    }
    assert!(worst_shift < 1e-9, "shift error {worst_shift}");
    assert!(worst_sum < 1e-12, "sum error {worst_sum}");

    // greedy/sample action selection contracts
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(
        select_action(&[1.0, 0.0, 0.0, 0.0, 0.0], SelectMode::Greedy, &mut rng).unwrap(),
        Action::Up
    );
    let tie = [0.3, 0.1, 0.3, 0.2, 0.1];
    assert_eq!(
        select_action(&tie, SelectMode::Greedy, &mut rng).unwrap(),
        Action::Up
    );

    pass(
        2,
        "blend algebra",
        format!("shift error {worst_shift:.2e}, sum error {worst_sum:.2e}"),
    );
}

// ---------------------------------------------------------------- criterion 3

#[test]
fn acceptance_03_alpha_schedule() {
    let schedule = AlphaSchedule::default(); // paper-scale settings
    let closed_form = |episode: u32| -> f64 {
        let k = episode / schedule.decay_interval;
        (schedule.alpha0 - schedule.decay_step * k as f64).max(schedule.floor)
    };
    for episode in 0..=20_000 {
        let got = schedule.alpha_at(episode);
        let want = closed_form(episode);
        assert_eq!(got, want, "episode {episode}");
        if episode >= 6000 {
            assert_eq!(got, 0.0, "alpha must be exactly 0 from episode 6000");
        }
    }
    assert_eq!(schedule.alpha_at(0), 0.6);
    assert!((schedule.alpha_at(2000) - 0.4).abs() < 1e-12);
    assert!((schedule.alpha_at(4000) - 0.2).abs() < 1e-12);
    assert_eq!(schedule.floor_episode(), 6000);

    pass(
        3,
        "alpha schedule",
        "closed form matched on episodes 0..=20000; exactly 0 from 6000".into(),
    );
}

// ---------------------------------------------------------------- criterion 4

#[test]
fn acceptance_04_ppo_mechanics() {
    // ratio identity before any update, on the real environment
    let env = Env::new(EnvConfig::default(), RewardConfig::dense()).unwrap();
    let net = NetConfig::new(env.frame_len(), env.config.rows).with_sizes(16, 16);
    let schedule = AlphaSchedule {
        alpha0: 0.0,
        decay_step: 0.0,
        decay_interval: 1,
        floor: 0.0,
    };
    let mut world = FroggerWorld::new(env, schedule, None);
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let model = ActorCritic::new(net, &mut rng);
    let buffer = collect_rollout(&mut world, &model, 64, &mut rng).unwrap();
    for ratio in policy_ratios(&model, &buffer).unwrap() {
        assert_eq!(ratio, 1.0, "pre-update ratios must be exactly 1");
    }

    // clipped-surrogate hand cases, through the tape implementation
    let surrogate = |ratio: f64, advantage: f64| -> f64 {
        let mut tape = Tape::new();
        let r = tape.constant(Tensor::scalar(ratio));
        let a = tape.constant(Tensor::scalar(advantage));
        let s = a3ps_core::eda::clipped_surrogate(&mut tape, r, a, 0.2).unwrap();
        tape.value(s).item()
    };
    assert_eq!(surrogate(1.5, 1.0), 1.2);
    assert_eq!(surrogate(0.5, -1.0), -0.8);

    // full-loss gradient check on a tiny model
    let cfg = PpoConfig {
        rollout_length: 6,
        minibatch_size: 6,
        ..PpoConfig::default()
    };
    let tiny = ActorCritic::new(NetConfig::new(3, 1).with_sizes(4, 4), &mut rng);
    let observations: Vec<Observation> = (0..6)
        .map(|i| Observation {
            frames: std::array::from_fn(|k| {
                (0..3)
                    .map(|j| ((i * 3 + j + 2 * k) as f64 * 0.31).sin())
                    .collect()
            }),
            goal_vector: vec![(i % 2) as f64],
        })
        .collect();
    let batch = MinibatchRefs {
        observations: observations.iter().collect(),
        actions: vec![0, 2, 4, 1, 3, 0],
        log_probs_old: vec![-1.7, -1.5, -1.65, -1.58, -1.61, -1.6],
        advantages: normalize_advantages(&[0.4, -1.2, 2.0, 0.1, -0.6, 1.1]),
        returns: vec![0.5, -0.25, 1.5, 0.0, 0.75, -0.5],
    };
    let mut params = tiny.params.clone();
    let mut tape = Tape::new();
    let eval = ppo_minibatch_loss(&tiny, &params, &mut tape, &batch, &cfg).unwrap();
    tape.backward(eval.loss, &mut params).unwrap();
    let err = gradient_check(
        &mut params,
        |ps| {
            let mut tape = Tape::new();
            let eval = ppo_minibatch_loss(&tiny, ps, &mut tape, &batch, &cfg)
                .map_err(|_| a3ps_core::nn::NnError::Contract("loss".into()))?;
            Ok(tape.value(eval.loss).item())
        },
        1e-5,
        &mut rng,
    )
    .unwrap();
    assert!(err < 1e-3, "ppo loss gradient error {err}");

    pass(
        4,
        "ppo mechanics",
        format!("ratios exactly 1 pre-update; hand cases exact; loss gradient error {err:.2e}"),
    );
}

// ---------------------------------------------------------------- criterion 5

#[test]
fn acceptance_05_autodiff_core() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);

    // affine-only: essentially exact
    let mut ps = ParamSet::new();
    let lin = Affine::new(&mut ps, "lin", 5, 4, &mut rng);
    let x = Tensor::matrix(3, 5, (0..15).map(|i| (i as f64 * 0.29).cos()).collect()).unwrap();
    let run_affine = |ps: &ParamSet, tape: &mut Tape| {
        let xt = tape.constant(x.clone());
        let y = lin.forward(tape, ps, xt).unwrap();
        tape.sum(y)
    };
    let mut tape = Tape::new();
    let loss = run_affine(&ps, &mut tape);
    tape.backward(loss, &mut ps).unwrap();
    let affine_err = gradient_check(
        &mut ps,
        |ps| {
            let mut tape = Tape::new();
            let l = run_affine(ps, &mut tape);
            Ok(tape.value(l).item())
        },
        1e-5,
        &mut rng,
    )
    .unwrap();
    assert!(affine_err < 1e-8, "affine gradient error {affine_err}");

    // relu composition
    let mut ps = ParamSet::new();
    let l1 = Affine::new(&mut ps, "l1", 4, 6, &mut rng);
    let l2 = Affine::new(&mut ps, "l2", 6, 2, &mut rng);
    let x2 = Tensor::matrix(
        3,
        4,
        (0..12).map(|i| (i as f64 * 0.41).sin() + 0.07).collect(),
    )
    .unwrap();
    let run_mlp = |ps: &ParamSet, tape: &mut Tape| {
        let xt = tape.constant(x2.clone());
        let h = l1.forward(tape, ps, xt).unwrap();
        let h = tape.relu(h);
        let y = l2.forward(tape, ps, h).unwrap();
        let sq = tape.mul(y, y).unwrap();
        tape.mean(sq)
    };
    let mut tape = Tape::new();
    let loss = run_mlp(&ps, &mut tape);
    tape.backward(loss, &mut ps).unwrap();
    let relu_err = gradient_check(
        &mut ps,
        |ps| {
            let mut tape = Tape::new();
            let l = run_mlp(ps, &mut tape);
            Ok(tape.value(l).item())
        },
        1e-5,
        &mut rng,
    )
    .unwrap();
    assert!(relu_err < 1e-4, "relu mlp gradient error {relu_err}");

    // recurrent composition
    let mut ps = ParamSet::new();
    let cell = GruCell::new(&mut ps, "cell", 3, 5, &mut rng);
    let head = Affine::new(&mut ps, "head", 5, 1, &mut rng);
    let seq: Vec<Tensor> = (0..3)
        .map(|t| {
            Tensor::matrix(
                2,
                3,
                (0..6).map(|i| ((t * 6 + i) as f64 * 0.23).cos()).collect(),
            )
            .unwrap()
        })
        .collect();
    let run_gru = |ps: &ParamSet, tape: &mut Tape| {
        let steps: Vec<_> = seq.iter().map(|s| tape.constant(s.clone())).collect();
        let h = cell.run(tape, ps, &steps).unwrap();
        let y = head.forward(tape, ps, h).unwrap();
        tape.mean(y)
    };
    let mut tape = Tape::new();
    let loss = run_gru(&ps, &mut tape);
    tape.backward(loss, &mut ps).unwrap();
    let gru_err = gradient_check(
        &mut ps,
        |ps| {
            let mut tape = Tape::new();
            let l = run_gru(ps, &mut tape);
            Ok(tape.value(l).item())
        },
        1e-5,
        &mut rng,
    )
    .unwrap();
    assert!(gru_err < 1e-4, "recurrent gradient error {gru_err}");

    // softmax / cross-entropy hand values
    let mut uniform = [0.0; 5];
    softmax_slice(&mut uniform);
    for p in uniform {
        assert!((p - 0.2).abs() < 1e-15);
    }
    let mut tape = Tape::new();
    let logits = tape.constant(Tensor::matrix(1, 5, vec![0.0; 5]).unwrap());
    let ce = tape.cross_entropy(logits, &[2]).unwrap();
    let ce_err = (tape.value(ce).item() - 5.0f64.ln()).abs();
    assert!(ce_err < 1e-9, "uniform cross-entropy error {ce_err}");

    pass(
        5,
        "autodiff core",
        format!("gradient errors: affine {affine_err:.1e}, relu {relu_err:.1e}, recurrent {gru_err:.1e}; ln5 error {ce_err:.1e}"),
    );
}

// ---------------------------------------------------------------- criterion 6

/// Balanced synthetic corpus over reachable states with round-robin labels;
/// the advice text names each record's (pre-shuffle) action.
fn balanced_corpus(env: &Env, n: usize) -> Vec<AdviceRecord> {
    let states = reachable_states(env, ENUMERATION_CAP).unwrap();
    let phrase = |a: Action| match a {
        Action::Up => "move forward path is clear",
        Action::Down => "move backward to stay safe",
        Action::Left => "move left for a better position",
        Action::Right => "move right for a better position",
        Action::NoOp => "wait here until the path is clear",
    };
    (0..n)
        .map(|i| {
            let label = Action::from_index(i % 5).unwrap();
            let advice = phrase(label).to_string();
            AdviceRecord {
                state: states[(i * 7) % states.len()].clone(),
                label,
                tokens: preprocess(&advice),
                advice,
                split: Split::Train,
            }
        })
        .collect()
}

#[test]
fn acceptance_06_ada_training_sanity() {
    let env = Env::new(EnvConfig::default(), RewardConfig::dense()).unwrap();

    // (a) a 20-record corpus is memorized within 500 epochs
    let mut records = balanced_corpus(&env, 20);
    for r in records.iter_mut().skip(15) {
        r.split = Split::Tune;
    }
    let vocab = build_vocab(&records);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let config = AdaConfig {
        embed_dim: 8,
        text_hidden: 16,
        state_hidden: 16,
        fusion_hidden: 16,
        ..AdaConfig::new(env.frame_len(), vocab.len())
    };
    let mut model = AdaModel::new(config, &mut rng);
    let report = train_supervised(
        &mut model,
        &env,
        &records,
        &vocab,
        &AdaTrainConfig {
            epochs: 500,
            batch_size: 8,
            patience: 500,
            ..AdaTrainConfig::default()
        },
        &mut rng,
    )
    .unwrap();
    let best_train = report
        .epochs
        .iter()
        .map(|e| e.train_accuracy)
        .fold(0.0, f64::max);
    assert!(best_train >= 0.95, "overfit accuracy only {best_train}");

    // (b) label permutation trains to chance-level tune accuracy
    let mut records = balanced_corpus(&env, 500);
    for r in records.iter_mut().skip(400) {
        r.split = Split::Tune; // balanced 20 per action
    }
    // shuffle the train labels in place
    use rand::seq::SliceRandom;
    let mut labels: Vec<Action> = records[..400].iter().map(|r| r.label).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(66);
    labels.shuffle(&mut shuffle_rng);
    for (r, l) in records[..400].iter_mut().zip(labels) {
        r.label = l;
    }
    let vocab = build_vocab(&records);
    let config = AdaConfig {
        embed_dim: 8,
        text_hidden: 16,
        state_hidden: 16,
        fusion_hidden: 16,
        ..AdaConfig::new(env.frame_len(), vocab.len())
    };
    let mut model = AdaModel::new(config, &mut rng);
    train_supervised(
        &mut model,
        &env,
        &records,
        &vocab,
        &AdaTrainConfig {
            epochs: 15,
            batch_size: 16,
            patience: 15,
            ..AdaTrainConfig::default()
        },
        &mut rng,
    )
    .unwrap();
    let tune: Vec<AdviceRecord> = records[400..].to_vec();
    let chance = evaluate(&model, &env, &tune, &vocab).unwrap().accuracy;
    assert!(
        (0.1..=0.3).contains(&chance),
        "permuted-label tune accuracy {chance} outside 0.2 +/- 0.1"
    );

    // (c) frozen weights: the advice model's checksum is unchanged by RL
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::desk(RewardMode::Sparse, AgentMode::A3ps);
    cfg.episodes = 100;
    cfg.seeds = vec![1];
    cfg.out_dir = dir.path().join("frozen-run");
    let corpus_path = dir.path().join("corpus.jsonl");
    let ada_path = dir.path().join("ada.ckpt");
    let desk_env = Env::new(cfg.env.clone(), RewardConfig::dense()).unwrap();
    let oracle = solve_oracle(&desk_env, cfg.oracle_gamma, ORACLE_HORIZON).unwrap();
    let corpus = build_corpus(&desk_env, &default_rules(), &oracle, 1935, 1).unwrap();
    save_corpus(&corpus, &corpus_path).unwrap();
    train_ada_from_corpus(
        &desk_env,
        &corpus,
        None,
        &desk_ada_train_config(),
        1,
        &ada_path,
    )
    .unwrap();
    cfg.corpus_path = Some(corpus_path);
    cfg.ada_checkpoint = Some(ada_path);
    std::fs::create_dir_all(&cfg.out_dir).unwrap();
    let guidance = load_guidance(&cfg).unwrap();
    let checksum_before = guidance.ada.params.checksum();
    run_seed(&cfg, 1, Some(&guidance), false, None).unwrap();
    let checksum_after = guidance.ada.params.checksum();
    assert_eq!(
        checksum_before, checksum_after,
        "advice model must stay frozen"
    );

    pass(
        6,
        "ada training sanity",
        format!("overfit {best_train:.3}; permuted-label tune {chance:.3}; frozen checksum {checksum_after:016x}"),
    );
}

// ---------------------------------------------------------------- criterion 7

#[test]
fn acceptance_07_advice_integrity() {
    let env = Env::new(EnvConfig::default(), RewardConfig::dense()).unwrap();
    let oracle = solve_oracle(&env, 0.99, ORACLE_HORIZON).unwrap();
    let rules = default_rules();
    let states = reachable_states(&env, ENUMERATION_CAP).unwrap();
    let mut coverage_errors = 0usize;
    let mut label_mismatches = 0usize;
    for state in &states {
        match generate_advice(state, &env.config, &rules, &oracle) {
            Ok(record) => {
                if Some(record.label) != oracle.greedy(state) {
                    label_mismatches += 1;
                }
                assert!(!record.advice.is_empty());
            }
            Err(_) => coverage_errors += 1,
        }
    }
    assert_eq!(coverage_errors, 0, "template coverage errors");
    assert_eq!(
        label_mismatches, 0,
        "labels must equal the oracle's greedy action"
    );

    pass(
        7,
        "advice integrity",
        format!(
            "{} reachable states, 0 coverage errors, 0 label mismatches",
            states.len()
        ),
    );
}

// ------------------------------------------------------- criteria 8 and 9

struct ExperimentAssets {
    dir: tempfile::TempDir,
    corpus_path: std::path::PathBuf,
    ada_path: std::path::PathBuf,
}

/// Corpus + trained advice model for the desk level, built from scratch.
fn build_assets() -> ExperimentAssets {
    let dir = tempfile::tempdir().unwrap();
    let corpus_path = dir.path().join("corpus.jsonl");
    let ada_path = dir.path().join("ada.ckpt");
    let cfg = ExperimentConfig::desk(RewardMode::Dense, AgentMode::Eda);
    let env = Env::new(cfg.env.clone(), RewardConfig::dense()).unwrap();
    let oracle = solve_oracle(&env, cfg.oracle_gamma, ORACLE_HORIZON).unwrap();
    let corpus = build_corpus(&env, &default_rules(), &oracle, 1935, 1).unwrap();
    save_corpus(&corpus, &corpus_path).unwrap();
    train_ada_from_corpus(&env, &corpus, None, &desk_ada_train_config(), 1, &ada_path).unwrap();
    ExperimentAssets {
        dir,
        corpus_path,
        ada_path,
    }
}

fn run_condition(
    assets: &ExperimentAssets,
    reward: RewardMode,
    agent: AgentMode,
    name: &str,
) -> Vec<a3ps_harness::SeedOutcome> {
    let mut cfg = ExperimentConfig::desk(reward, agent);
    cfg.out_dir = assets.dir.path().join(name);
    if agent == AgentMode::A3ps {
        cfg.corpus_path = Some(assets.corpus_path.clone());
        cfg.ada_checkpoint = Some(assets.ada_path.clone());
    }
    std::fs::create_dir_all(&cfg.out_dir).unwrap();
    let guidance = match agent {
        AgentMode::A3ps => Some(load_guidance(&cfg).unwrap()),
        AgentMode::Eda => None,
    };
    cfg.seeds
        .clone()
        .iter()
        .map(|&seed| run_seed(&cfg, seed, guidance.as_ref(), false, None).unwrap())
        .collect()
}

fn first_goal(rows: &[a3ps_harness::EpisodeRow]) -> Option<u32> {
    rows.iter().find(|r| r.reached_goal).map(|r| r.episode)
}

fn early_mean(rows: &[a3ps_harness::EpisodeRow]) -> f64 {
    let third = rows.len() / 3;
    rows[..third].iter().map(|r| r.smoothed_reward).sum::<f64>() / third as f64
}

fn final_goal_rate(rows: &[a3ps_harness::EpisodeRow], span: usize) -> f64 {
    let tail = &rows[rows.len().saturating_sub(span)..];
    tail.iter().filter(|r| r.reached_goal).count() as f64 / tail.len() as f64
}

#[test]
fn acceptance_08_scaled_dense_comparison() {
    let assets = build_assets();
    let shaped = run_condition(&assets, RewardMode::Dense, AgentMode::A3ps, "a3ps-dense");
    let baseline = run_condition(&assets, RewardMode::Dense, AgentMode::Eda, "eda-dense");

    let mut first_goal_wins = 0;
    let mut early_mean_wins = 0;
    let mut detail = String::new();
    for (a, b) in shaped.iter().zip(&baseline) {
        let (fa, fb) = (first_goal(&a.rows), first_goal(&b.rows));
        let (ea, eb) = (early_mean(&a.rows), early_mean(&b.rows));
        if match (fa, fb) {
            (Some(x), Some(y)) => x < y,
            (Some(_), None) => true,
            _ => false,
        } {
            first_goal_wins += 1;
        }
        if ea > eb {
            early_mean_wins += 1;
        }
        detail.push_str(&format!(
            "seed {}: first goal {fa:?} vs {fb:?}, early mean {ea:.1} vs {eb:.1}; ",
            a.seed
        ));
    }
    assert!(
        first_goal_wins >= 2,
        "shaped agent must reach its first goal earlier in at least 2 of 3 seeds: {detail}"
    );
    assert!(
        early_mean_wins >= 2,
        "shaped agent must lead the first-third smoothed reward in at least 2 of 3 seeds: {detail}"
    );

    pass(
        8,
        "scaled dense comparison",
        format!(
            "first-goal wins {first_goal_wins}/3, early-mean wins {early_mean_wins}/3 — {detail}"
        ),
    );
}

#[test]
fn acceptance_09_scaled_sparse_comparison() {
    let assets = build_assets();
    let shaped = run_condition(&assets, RewardMode::Sparse, AgentMode::A3ps, "a3ps-sparse");
    let baseline = run_condition(&assets, RewardMode::Sparse, AgentMode::Eda, "eda-sparse");

    let mut seed_wins = 0;
    let mut greedy_goals = 0;
    let mut detail = String::new();
    for (a, b) in shaped.iter().zip(&baseline) {
        let shaped_rate = final_goal_rate(&a.rows, 500);
        let baseline_rate = final_goal_rate(&b.rows, 500);
        if shaped_rate >= 0.5 && baseline_rate <= 0.05 {
            seed_wins += 1;
        }
        let greedy = a.greedy.expect("completed run has a greedy eval");
        if greedy.reached_goal {
            greedy_goals += 1;
        }
        detail.push_str(&format!(
            "seed {}: final-500 goal rate {:.1}% vs {:.1}%, solo greedy goal {}; ",
            a.seed,
            shaped_rate * 100.0,
            baseline_rate * 100.0,
            greedy.reached_goal
        ));
    }
    assert!(
        seed_wins >= 2,
        "shaped >= 50% and baseline <= 5% must hold in at least 2 of 3 seeds: {detail}"
    );
    assert!(
        greedy_goals >= 2,
        "the trained policy alone (blend weight 0, greedy) must reach the goal: {detail}"
    );

    pass(
        9,
        "scaled sparse comparison",
        format!("qualifying seeds {seed_wins}/3, solo greedy goals {greedy_goals}/3 — {detail}"),
    );
}

// --------------------------------------------------------------- criterion 10

#[test]
fn acceptance_10_determinism_and_resume() {
    assert_eq!(
        CSV_HEADER,
        "episode,reward,steps,reached_goal,alpha,smoothed_reward"
    );

    let assets = build_assets();
    let base = |name: &str| {
        let mut cfg = ExperimentConfig::desk(RewardMode::Sparse, AgentMode::A3ps);
        cfg.episodes = 120;
        cfg.seeds = vec![7];
        cfg.corpus_path = Some(assets.corpus_path.clone());
        cfg.ada_checkpoint = Some(assets.ada_path.clone());
        cfg.out_dir = assets.dir.path().join(name);
        std::fs::create_dir_all(&cfg.out_dir).unwrap();
        cfg
    };

    let cfg_a = base("det-a");
    let guidance = load_guidance(&cfg_a).unwrap();
    run_seed(&cfg_a, 7, Some(&guidance), false, None).unwrap();
    let cfg_b = base("det-b");
    run_seed(&cfg_b, 7, Some(&guidance), false, None).unwrap();

    let read = |cfg: &ExperimentConfig, file: &str| {
        std::fs::read(cfg.out_dir.join("seed-7").join(file)).unwrap()
    };
    assert_eq!(
        read(&cfg_a, "episodes.csv"),
        read(&cfg_b, "episodes.csv"),
        "identical (config, seed) must produce byte-identical CSVs"
    );
    assert_eq!(read(&cfg_a, "model.ckpt"), read(&cfg_b, "model.ckpt"));

    // interrupted at an update boundary, then resumed
    let cfg_c = base("det-c");
    run_seed(&cfg_c, 7, Some(&guidance), false, Some(6)).unwrap();
    let partial = read(&cfg_c, "episodes.csv");
    assert!(partial.len() < read(&cfg_a, "episodes.csv").len());
    run_seed(&cfg_c, 7, Some(&guidance), true, None).unwrap();
    assert_eq!(
        read(&cfg_a, "episodes.csv"),
        read(&cfg_c, "episodes.csv"),
        "a checkpointed-and-resumed run must match the uninterrupted run"
    );
    assert_eq!(
        read(&cfg_a, "model.ckpt"),
        read(&cfg_c, "model.ckpt"),
        "resumed parameters must be bit-identical"
    );
    assert_eq!(read(&cfg_a, "optim.ckpt"), read(&cfg_c, "optim.ckpt"));

    pass(
        10,
        "determinism and resume",
        "CSV, model, and optimizer bytes identical across reruns and resume".into(),
    );
}
