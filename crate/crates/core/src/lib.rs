//! Advice-aided policy shaping on a deterministic Frogger gridworld.
//!
//! The crate is organized around the pieces of the training pipeline:
//!
//! - [`env`] — the Frogger MDP, observation construction, and a
//!   value-iteration oracle used for advice synthesis and testing.
//! - [`nn`] — dense tensors, reverse-mode autodiff, layers, and Adam.
//! - [`advice`] — template advice generation, text preprocessing, and the
//!   advice corpus format.
//! - [`ada`] — the advice-driven agent: a supervised classifier mapping
//!   (state, advice tokens) to action scores, frozen during RL.
//! - [`eda`] — the experience-driven agent: an actor-critic trained with PPO.
//! - [`blend`] — the score-blending rule and its decaying weight schedule.

pub mod ada;
pub mod advice;
pub mod blend;
pub mod eda;
pub mod env;
pub mod nn;
