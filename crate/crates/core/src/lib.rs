//! Warm-started reinforcement learning: collect a few episodes with a
//! language-model (or scripted) policy, pre-train an off-policy learner on
//! them, then fine-tune online.

pub mod agents;
pub mod env;
pub mod experiment;
pub mod nn;
pub mod policy;
pub mod replay;
pub mod runner;
pub mod selfcheck;
