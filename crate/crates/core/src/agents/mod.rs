//! Off-policy learners: Double DQN for discrete actions and SAC for
//! continuous ones.

mod ddqn;
mod sac;

pub use ddqn::{ddqn_td_targets, DdqnAgent};
pub use sac::{log_one_minus_tanh_sq, SacAgent, SacLosses};

use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::env::{Action, ActionSpace, MdpSpec, Observation};
use crate::nn::NnError;
use crate::replay::{ReplayBuffer, ReplayError};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("empty batch")]
    EmptyBatch,
    #[error("transition action does not fit this agent: {0}")]
    BadAction(String),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub gamma: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Gradient updates between hard target copies (DDQN).
    pub target_update_interval: u64,
    pub hidden: Vec<usize>,
    /// Gradient updates per environment step during online learning.
    pub updates_per_step: usize,
    /// Polyak coefficient for SAC target critics.
    pub soft_update_tau: f64,
    pub initial_temperature: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            gamma: 0.99,
            epsilon: 0.1,
            learning_rate: 5e-5,
            batch_size: 256,
            buffer_capacity: ReplayBuffer::DEFAULT_CAPACITY,
            target_update_interval: 1000,
            hidden: vec![64, 64],
            updates_per_step: 1,
            soft_update_tau: 0.005,
            initial_temperature: 1.0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::InvalidHyperparameter(m.to_string()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be a non-negative number");
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 || self.target_update_interval == 0 {
            return bad("batch size, buffer capacity and target interval must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        if !(self.soft_update_tau > 0.0 && self.soft_update_tau <= 1.0) {
            return bad("soft update tau must lie in (0, 1]");
        }
        if !(self.initial_temperature > 0.0) {
            return bad("initial temperature must be positive");
        }
        Ok(())
    }
}

/// Greedy with probability `1 - epsilon`, uniform otherwise. Ties go to the
/// lowest index.
pub fn epsilon_greedy<R: Rng + ?Sized>(q_values: &[f64], epsilon: f64, rng: &mut R) -> usize {
    assert!(
        !q_values.is_empty(),
        "epsilon_greedy needs at least one action"
    );
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..q_values.len())
    } else {
        argmax(q_values)
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// A learner for one environment.
#[derive(Debug, Clone)]
pub enum Agent {
    Ddqn(DdqnAgent),
    Sac(SacAgent),
}

impl Agent {
    /// DDQN for discrete action spaces, SAC for continuous ones.
    pub fn for_spec(spec: &MdpSpec, hp: &Hyperparams, seed: u64) -> Result<Agent, AgentError> {
        hp.validate()?;
        match &spec.action_space {
            ActionSpace::Discrete(n) => {
                Ok(Agent::Ddqn(DdqnAgent::new(spec.obs_dim, *n, hp, seed)?))
            }
            ActionSpace::Continuous { high, .. } => Ok(Agent::Sac(SacAgent::new(
                spec.obs_dim,
                high.len(),
                high[0],
                hp,
                seed,
            )?)),
        }
    }

    /// Behaviour action: epsilon-greedy for DDQN, a stochastic sample for SAC.
    /// With `explore = false` both act greedily.
    pub fn act<R: Rng + ?Sized>(
        &self,
        obs: &Observation,
        rng: &mut R,
        explore: bool,
    ) -> Result<Action, AgentError> {
        match self {
            Agent::Ddqn(a) => Ok(Action::Discrete(a.act(&obs.values, rng, explore)?)),
            Agent::Sac(a) => Ok(Action::Continuous(
                a.sample_action(&obs.values, rng, !explore)?.0,
            )),
        }
    }

    /// One gradient update from `buf`; returns the critic loss.
    pub fn update(&mut self, buf: &mut ReplayBuffer) -> Result<f64, AgentError> {
        match self {
            Agent::Ddqn(a) => a.update(buf),
            Agent::Sac(a) => Ok(a.update(buf)?.q_loss),
        }
    }

    pub fn update_count(&self) -> u64 {
        match self {
            Agent::Ddqn(a) => a.update_count(),
            Agent::Sac(a) => a.update_count(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Agent::Ddqn(a) => a.online().is_finite() && a.target().is_finite(),
            Agent::Sac(a) => a.networks().iter().all(|(_, n)| n.is_finite()),
        }
    }

    /// Write one snapshot file per network into `dir`, named by role.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), AgentError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(NnError::from)?;
        let nets = match self {
            Agent::Ddqn(a) => vec![("online_q", a.online()), ("target_q", a.target())],
            Agent::Sac(a) => a.networks(),
        };
        for (role, net) in nets {
            net.save(dir.join(format!("{role}.bin")))?;
        }
        Ok(())
    }

    /// Replace this agent's networks with snapshots from `dir`.
    pub fn load(&mut self, dir: impl AsRef<Path>) -> Result<(), AgentError> {
        let dir = dir.as_ref();
        match self {
            Agent::Ddqn(a) => {
                let online = crate::nn::Mlp::load(dir.join("online_q.bin"))?;
                let target = crate::nn::Mlp::load(dir.join("target_q.bin"))?;
                a.replace_networks(online, target)
            }
            Agent::Sac(a) => {
                let mut loaded = Vec::new();
                for (role, _) in a.networks() {
                    loaded.push(crate::nn::Mlp::load(dir.join(format!("{role}.bin")))?);
                }
                a.replace_networks(loaded)
            }
        }
    }
}
