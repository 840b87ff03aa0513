//! Likelihood reward redistribution for episodic-reward reinforcement learning.

pub mod config;
pub mod diagnostics;
pub mod env;
pub mod error;
pub mod experiment;
pub mod nn;
pub mod normal;
pub mod numeric;
pub mod reward_model;
pub mod sac;
pub mod seeding;
pub mod verify;

pub use error::{Error, Result};
