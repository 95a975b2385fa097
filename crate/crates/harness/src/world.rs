//! The rollout world for the gridworld: owns one episode at a time, applies
//! the advice blend to the behavior distribution while the schedule is
//! above zero, logs finished episodes, and resets itself.

use std::time::Instant;

use a3ps_core::advice::generate_advice;
use a3ps_core::blend::{blend, ActionScores, AlphaSchedule};
use a3ps_core::eda::{EdaError, RolloutWorld, WorldStep};
use a3ps_core::env::{Action, Env, Episode, GridState, Observation, TerminalCause};

use crate::{assets::Guidance, EpisodeLog};

pub struct FroggerWorld<'a> {
    episode: Episode,
    schedule: AlphaSchedule,
    guidance: Option<&'a Guidance>,
    episode_index: u32,
    alpha: f64,
    episode_reward: f64,
    episode_steps: u32,
    reached_goal: bool,
    started: Instant,
    completed: Vec<EpisodeLog>,
}

impl<'a> FroggerWorld<'a> {
    pub fn new(env: Env, schedule: AlphaSchedule, guidance: Option<&'a Guidance>) -> Self {
        let episode = Episode::start(env, 0);
        Self {
            episode,
            schedule,
            alpha: schedule.alpha_at(0),
            guidance,
            episode_index: 0,
            episode_reward: 0.0,
            episode_steps: 0,
            reached_goal: false,
            started: Instant::now(),
            completed: Vec::new(),
        }
    }

    /// Index of the episode currently being played.
    pub fn episode_index(&self) -> u32 {
        self.episode_index
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn guidance(&self) -> Option<&Guidance> {
        self.guidance
    }

    pub fn state(&self) -> &GridState {
        self.episode.state()
    }

    /// Finished episodes accumulated since the last drain.
    pub fn drain_completed(&mut self) -> Vec<EpisodeLog> {
        std::mem::take(&mut self.completed)
    }

    /// Restores mid-run bookkeeping from a checkpoint.
    pub fn restore(
        &mut self,
        episode_index: u32,
        state: GridState,
        history: Vec<GridState>,
        episode_reward: f64,
        episode_steps: u32,
        reached_goal: bool,
    ) {
        self.episode_index = episode_index;
        self.alpha = self.schedule.alpha_at(episode_index);
        self.episode.restore(state, history);
        self.episode_reward = episode_reward;
        self.episode_steps = episode_steps;
        self.reached_goal = reached_goal;
        self.started = Instant::now();
    }

    pub fn snapshot(&self) -> (GridState, Vec<GridState>, f64, u32, bool) {
        (
            self.episode.state().clone(),
            self.episode.history().to_vec(),
            self.episode_reward,
            self.episode_steps,
            self.reached_goal,
        )
    }
}

impl RolloutWorld for FroggerWorld<'_> {
    fn observation(&self) -> Observation {
        self.episode.observation()
    }

    fn step(&mut self, action: Action) -> WorldStep {
        let outcome = self
            .episode
            .step(action)
            .expect("world never steps a terminal episode");
        self.episode_reward += outcome.reward;
        self.episode_steps += 1;
        if outcome.next_state.terminal == Some(TerminalCause::Goal) {
            self.reached_goal = true;
        }
        if outcome.terminal {
            self.completed.push(EpisodeLog {
                episode: self.episode_index,
                reward: self.episode_reward,
                steps: self.episode_steps,
                reached_goal: self.reached_goal,
                alpha: self.alpha,
                wall_ms: self.started.elapsed().as_millis() as u64,
            });
            self.episode_index += 1;
            self.alpha = self.schedule.alpha_at(self.episode_index);
            self.episode_reward = 0.0;
            self.episode_steps = 0;
            self.reached_goal = false;
            self.started = Instant::now();
            self.episode.reset(self.episode_index as u64);
        }
        WorldStep {
            reward: outcome.reward,
            terminal: outcome.terminal,
        }
    }

    fn behavior_probs(
        &mut self,
        eda_logits: &ActionScores,
    ) -> a3ps_core::eda::Result<ActionScores> {
        match &self.guidance {
            Some(guidance) if self.alpha > 0.0 => {
                let state = self.episode.state();
                let record = generate_advice(
                    state,
                    &self.episode.env().config,
                    &guidance.rules,
                    &guidance.oracle,
                )
                .map_err(|e| EdaError::Contract(format!("advice generation failed: {e}")))?;
                let features = self.episode.env().frame(state);
                let tokens = guidance.vocab.encode(&record.tokens);
                let a_adv = guidance
                    .ada
                    .action_scores(&features, &tokens)
                    .map_err(|e| EdaError::Contract(format!("advice scoring failed: {e}")))?;
                Ok(blend(&a_adv, eda_logits, self.alpha)?)
            }
            _ => Ok(blend(&[0.0; 5], eda_logits, 0.0)?),
        }
    }
}
