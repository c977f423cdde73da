//! Resource-restricted reinforcement learning laboratory.
//!
//! States are augmented with the remaining quantity of each non-replenishable
//! resource. Exploration is driven by a surprise bonus (negative log-likelihood
//! of the realized transition under a learned dynamics model) scaled by a
//! coefficient that grows with the remaining resources, so that the agent is
//! rewarded for novelty more when it still has the means to act on it.
//!
//! Layout:
//! - [`mdp`]: augmented states, transitions, episode logs
//! - [`rng`]: seeded, splittable random streams
//! - [`envs`]: Electric / Delivery / Electric-Delivery Mountain Car and a
//!   tabular resource gridworld
//! - [`nn`]: single-hidden-layer Gaussian dynamics MLP with Adam
//! - [`surprise`]: replay buffer and the surprise bonus
//! - [`raeb`]: resource-aware coefficient and reward shaping
//! - [`tabular`]: Q-learning with a weighted UCB-Hoeffding bonus, value iteration, regret
//! - [`agent`]: discretized Q-learning agent for the Mountain Car variants
//! - [`harness`]: configs, the training loop, metrics, sweeps and diagnostics

pub mod agent;
pub mod envs;
pub mod error;
pub mod harness;
pub mod kv;
pub mod mdp;
pub mod nn;
pub mod raeb;
pub mod rng;
pub mod surprise;
pub mod tabular;

pub use error::{Error, Result};
pub use mdp::{EpisodeLog, R3LState, ResourceVector, Transition};
pub use rng::{seeded_rng, RandomStream};
