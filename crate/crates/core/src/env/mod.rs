//! Seeded environments: cart-pole, pendulum, frozen lake, cliff walking and
//! mountain car.
//!
//! Every [`Env`] owns its random generator. Two environments created with the
//! same seed and driven by the same action sequence produce bitwise-identical
//! observations, rewards and flags.
//!
//! Action indices are 0-based internally. The 1-based numbering used in
//! prompts lives in [`crate::policy`].

pub mod cartpole;
pub mod cliffwalking;
pub mod frozenlake;
pub mod mountaincar;
pub mod pendulum;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cartpole::CartPoleState;
pub use mountaincar::MountainCarState;
pub use pendulum::PendulumState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid action {action} for {kind}")]
    InvalidAction { kind: EnvKind, action: String },
    #[error("episode already finished; call reset first")]
    EpisodeFinished,
    #[error("unknown environment {0:?}")]
    UnknownEnv(String),
    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EnvKind {
    CartPole,
    Pendulum,
    FrozenLake,
    CliffWalking,
    MountainCar,
}

impl EnvKind {
    pub const ALL: [EnvKind; 5] = [
        EnvKind::CartPole,
        EnvKind::Pendulum,
        EnvKind::FrozenLake,
        EnvKind::CliffWalking,
        EnvKind::MountainCar,
    ];

    /// Lower-case name used in configs, CSV files and dataset records.
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::CartPole => "cartpole",
            EnvKind::Pendulum => "pendulum",
            EnvKind::FrozenLake => "frozenlake",
            EnvKind::CliffWalking => "cliffwalking",
            EnvKind::MountainCar => "mountaincar",
        }
    }

    pub fn is_grid(self) -> bool {
        matches!(self, EnvKind::FrozenLake | EnvKind::CliffWalking)
    }

    /// `(rows, cols)` for the grid worlds.
    pub fn grid_shape(self) -> Option<(usize, usize)> {
        match self {
            EnvKind::FrozenLake => Some((frozenlake::ROWS, frozenlake::COLS)),
            EnvKind::CliffWalking => Some((cliffwalking::ROWS, cliffwalking::COLS)),
            _ => None,
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        EnvKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| EnvError::UnknownEnv(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionSpace {
    Discrete(usize),
    Continuous { low: Vec<f64>, high: Vec<f64> },
}

impl ActionSpace {
    pub fn contains(&self, action: &Action) -> bool {
        match (self, action) {
            (ActionSpace::Discrete(n), Action::Discrete(a)) => a < n,
            (ActionSpace::Continuous { low, .. }, Action::Continuous(v)) => {
                v.len() == low.len() && v.iter().all(|x| x.is_finite())
            }
            _ => false,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ActionSpace::Discrete(_) => 1,
            ActionSpace::Continuous { low, .. } => low.len(),
        }
    }
}

/// Static description of one environment: kind, horizon, spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpSpec {
    pub kind: EnvKind,
    pub horizon: usize,
    pub action_space: ActionSpace,
    pub obs_dim: usize,
    /// Only meaningful for FrozenLake.
    pub slippery: bool,
}

impl MdpSpec {
    /// Default spec for `kind`. FrozenLake is slippery by default.
    pub fn new(kind: EnvKind) -> Self {
        let (horizon, action_space, obs_dim) = match kind {
            EnvKind::CartPole => (500, ActionSpace::Discrete(2), 4),
            EnvKind::Pendulum => (
                200,
                ActionSpace::Continuous {
                    low: vec![-pendulum::MAX_TORQUE],
                    high: vec![pendulum::MAX_TORQUE],
                },
                3,
            ),
            EnvKind::FrozenLake => (
                100,
                ActionSpace::Discrete(4),
                frozenlake::ROWS * frozenlake::COLS,
            ),
            EnvKind::CliffWalking => (
                200,
                ActionSpace::Discrete(4),
                cliffwalking::ROWS * cliffwalking::COLS,
            ),
            EnvKind::MountainCar => (200, ActionSpace::Discrete(3), 2),
        };
        MdpSpec {
            kind,
            horizon,
            action_space,
            obs_dim,
            slippery: kind == EnvKind::FrozenLake,
        }
    }

    pub fn with_slippery(mut self, slippery: bool) -> Self {
        self.slippery = slippery && self.kind == EnvKind::FrozenLake;
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.horizon == 0 {
            return Err(EnvError::InvalidSpec("horizon must be at least 1".into()));
        }
        if self.obs_dim == 0 {
            return Err(EnvError::InvalidSpec("obs_dim must be positive".into()));
        }
        match &self.action_space {
            ActionSpace::Discrete(n) if *n < 2 => Err(EnvError::InvalidSpec(
                "discrete spaces need at least 2 actions".into(),
            )),
            ActionSpace::Continuous { low, high }
                if low.len() != high.len() || low.iter().zip(high).any(|(l, h)| l >= h) =>
            {
                Err(EnvError::InvalidSpec(
                    "continuous bounds need lo < hi".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn n_actions(&self) -> Option<usize> {
        match self.action_space {
            ActionSpace::Discrete(n) => Some(n),
            ActionSpace::Continuous { .. } => None,
        }
    }

    /// Per-step reward bounds `(min, max)`.
    pub fn reward_range(&self) -> (f64, f64) {
        match self.kind {
            EnvKind::CartPole => (1.0, 1.0),
            EnvKind::Pendulum => (-pendulum::MAX_COST, 0.0),
            EnvKind::FrozenLake => (0.0, 1.0),
            EnvKind::CliffWalking => (cliffwalking::CLIFF_REWARD, cliffwalking::STEP_REWARD),
            EnvKind::MountainCar => (-1.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridCell {
    pub row: usize,
    pub col: usize,
}

impl GridCell {
    pub const fn new(row: usize, col: usize) -> Self {
        GridCell { row, col }
    }

    pub fn index(self, cols: usize) -> usize {
        self.row * cols + self.col
    }

    pub fn from_index(index: usize, cols: usize) -> Self {
        GridCell::new(index / cols, index % cols)
    }
}

impl fmt::Display for GridCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// What the learner sees. Grid worlds are one-hot encoded and also carry the
/// decoded cell, which the prompt builder and scripted policies use.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub values: Vec<f64>,
    pub cell: Option<GridCell>,
}

impl Observation {
    pub fn vector(values: Vec<f64>) -> Self {
        Observation { values, cell: None }
    }

    pub fn grid(cell: GridCell, rows: usize, cols: usize) -> Self {
        let mut values = vec![0.0; rows * cols];
        values[cell.index(cols)] = 1.0;
        Observation {
            values,
            cell: Some(cell),
        }
    }

    /// Rebuild an observation of `kind` from its feature vector.
    pub fn from_values(kind: EnvKind, values: Vec<f64>) -> Self {
        match kind.grid_shape() {
            Some((_, cols)) => {
                let cell = values
                    .iter()
                    .position(|&v| v == 1.0)
                    .map(|i| GridCell::from_index(i, cols));
                Observation { values, cell }
            }
            None => Observation::vector(values),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn as_discrete(&self) -> Option<usize> {
        match self {
            Action::Discrete(a) => Some(*a),
            Action::Continuous(_) => None,
        }
    }

    pub fn as_continuous(&self) -> Option<&[f64]> {
        match self {
            Action::Discrete(_) => None,
            Action::Continuous(v) => Some(v),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Discrete(a) => write!(f, "{a}"),
            Action::Continuous(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_obs: Observation,
    pub reward: f64,
    /// The MDP reached an absorbing outcome.
    pub terminated: bool,
    /// The horizon was hit without termination.
    pub truncated: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// Full internal state of an environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvState {
    CartPole(CartPoleState),
    Pendulum(PendulumState),
    Grid(GridCell),
    MountainCar(MountainCarState),
}

#[derive(Debug, Clone)]
pub struct Env {
    spec: MdpSpec,
    state: EnvState,
    rng: ChaCha8Rng,
    episode_steps: usize,
    total_steps: u64,
    finished: bool,
}

/// Create an environment seeded with `seed` and draw its first initial state.
pub fn env_reset(spec: MdpSpec, seed: u64) -> (Env, Observation) {
    let mut env = Env::new(spec, seed);
    let obs = env.reset();
    (env, obs)
}

impl Env {
    pub fn new(spec: MdpSpec, seed: u64) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(seed);
        let state = match spec.kind {
            EnvKind::CartPole => EnvState::CartPole(CartPoleState::default()),
            EnvKind::Pendulum => EnvState::Pendulum(PendulumState::default()),
            EnvKind::FrozenLake => EnvState::Grid(frozenlake::START),
            EnvKind::CliffWalking => EnvState::Grid(cliffwalking::START),
            EnvKind::MountainCar => EnvState::MountainCar(MountainCarState::default()),
        };
        Env {
            spec,
            state,
            rng,
            episode_steps: 0,
            total_steps: 0,
            finished: true,
        }
    }

    pub fn spec(&self) -> &MdpSpec {
        &self.spec
    }

    pub fn kind(&self) -> EnvKind {
        self.spec.kind
    }

    pub fn state(&self) -> EnvState {
        self.state
    }

    /// Overwrite the internal state and start a new episode from it.
    pub fn set_state(&mut self, state: EnvState) {
        self.state = state;
        self.episode_steps = 0;
        self.finished = false;
    }

    /// Steps taken in the current episode.
    pub fn episode_steps(&self) -> usize {
        self.episode_steps
    }

    /// Steps taken over the lifetime of this environment.
    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    pub fn reset(&mut self) -> Observation {
        let rng = &mut self.rng;
        self.state = match self.spec.kind {
            EnvKind::CartPole => {
                let mut draw = || rng.random_range(-0.05..0.05);
                EnvState::CartPole(CartPoleState {
                    x: draw(),
                    x_dot: draw(),
                    theta: draw(),
                    theta_dot: draw(),
                })
            }
            EnvKind::Pendulum => EnvState::Pendulum(PendulumState {
                theta: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
                theta_dot: rng.random_range(-1.0..1.0),
            }),
            EnvKind::FrozenLake => EnvState::Grid(frozenlake::START),
            EnvKind::CliffWalking => EnvState::Grid(cliffwalking::START),
            EnvKind::MountainCar => EnvState::MountainCar(MountainCarState {
                position: rng.random_range(-0.6..-0.4),
                velocity: 0.0,
            }),
        };
        self.episode_steps = 0;
        self.finished = false;
        self.observation()
    }

    pub fn observation(&self) -> Observation {
        match self.state {
            EnvState::CartPole(s) => Observation::vector(s.to_vec()),
            EnvState::Pendulum(s) => Observation::vector(s.observation().to_vec()),
            EnvState::MountainCar(s) => Observation::vector(vec![s.position, s.velocity]),
            EnvState::Grid(cell) => {
                let (rows, cols) = self.spec.kind.grid_shape().expect("grid env");
                Observation::grid(cell, rows, cols)
            }
        }
    }

    pub fn step(&mut self, action: &Action) -> Result<StepResult, EnvError> {
        if self.finished {
            return Err(EnvError::EpisodeFinished);
        }
        if !self.spec.action_space.contains(action) {
            return Err(EnvError::InvalidAction {
                kind: self.spec.kind,
                action: action.to_string(),
            });
        }
        let (reward, terminated) = match (&mut self.state, action) {
            (EnvState::CartPole(s), Action::Discrete(a)) => {
                *s = cartpole::transition(*s, *a == 1);
                (cartpole::STEP_REWARD, s.is_failed())
            }
            (EnvState::Pendulum(s), Action::Continuous(u)) => {
                let (next, reward) = pendulum::transition(*s, u[0]);
                *s = next;
                (reward, false)
            }
            (EnvState::MountainCar(s), Action::Discrete(a)) => {
                *s = mountaincar::transition(*s, *a);
                let at_goal = s.at_goal();
                (mountaincar::reward(at_goal), at_goal)
            }
            (EnvState::Grid(cell), Action::Discrete(a)) => match self.spec.kind {
                EnvKind::FrozenLake => {
                    let dir = if self.spec.slippery {
                        frozenlake::slip(*a, &mut self.rng)
                    } else {
                        *a
                    };
                    let (next, reward, terminated) = frozenlake::transition(*cell, dir);
                    *cell = next;
                    (reward, terminated)
                }
                EnvKind::CliffWalking => {
                    let (next, reward, terminated) = cliffwalking::transition(*cell, *a);
                    *cell = next;
                    (reward, terminated)
                }
                _ => unreachable!("grid state in non-grid env"),
            },
            _ => unreachable!("action space checked above"),
        };
        self.episode_steps += 1;
        self.total_steps += 1;
        let truncated = !terminated && self.episode_steps >= self.spec.horizon;
        self.finished = terminated || truncated;
        Ok(StepResult {
            next_obs: self.observation(),
            reward,
            terminated,
            truncated,
        })
    }
}
