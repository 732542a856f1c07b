//! Chat prompts for each environment.
//!
//! The system prompts are kept byte-for-byte, odd spacing included: changing
//! them changes what the model sees.

use serde::{Deserialize, Serialize};

use super::history::{format_reward, EnvHistory};
use super::PolicyError;
use crate::env::{EnvKind, GridCell, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub top_p: f64,
    /// 0 disables top-k filtering and is left out of the request body.
    #[serde(skip_serializing_if = "is_zero", default)]
    pub top_k: u32,
    pub max_tokens: u32,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

impl ChatRequest {
    pub const DEFAULT_TEMPERATURE: f64 = 0.9;
    pub const DEFAULT_TOP_P: f64 = 0.6;
    pub const DEFAULT_TOP_K: u32 = 0;
    pub const DEFAULT_MAX_TOKENS: u32 = 2000;

    pub fn new(model: impl Into<String>, system: String, user: String) -> Self {
        ChatRequest {
            model: model.into(),
            messages: vec![
                ChatMessage {
                    role: Role::System,
                    content: system,
                },
                ChatMessage {
                    role: Role::User,
                    content: user,
                },
            ],
            temperature: Self::DEFAULT_TEMPERATURE,
            top_p: Self::DEFAULT_TOP_P,
            top_k: Self::DEFAULT_TOP_K,
            max_tokens: Self::DEFAULT_MAX_TOKENS,
        }
    }

    pub fn system(&self) -> &str {
        &self.messages[0].content
    }

    pub fn user(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or("")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("request serializes")
    }
}

const CLIFF_SYSTEM: &str = "You are an expert-level game player. Cliff walking is a task in which you control a player navigating a '4x12' grid world. The ('x', 'y') coordinate indicates the position at row 'x' and column 'y'. The player  needs to find a goal location while avoiding cliffs . The player can choose from 4 actions: move up, move right, move down, or move left. If the player takes an action at ('x', 'y'), he tries to move to ('a', 'b'). Rules: \n\
1. If ('a', 'b') is a cliff, the player incurs a large penalty of -100, and is reset to the starting position.\n\
2. If ('a', 'b') is safe or towards the grid boundary, results in a small penalty of -1. If ('a', 'b') is outside the grid's boundaries, it does not change position but still receive the -1 penalty.\n\
3. The game ends when the ('a', 'b') is the goal or 200 actions are performed. The goal is to navigate from the starting point to an target , while avoiding the cliff, in as few steps as possible.\n\
\n\
Type a number to indicate the action. For current position ('x', 'y'), the action means the player try to step into the next position. Type '1' to move up, which means trying to step into ('x-1', 'y'), '2' to move right, which means ('x', 'y+1'), '3' to move down, which means ('x+1', 'y'), or '4' to move left, which means ('x', 'y-1'). Ensure you only provide the action number from the valid action list, i.e., [1, 2, 3, 4].";

/// System message for CartPole.
pub const CARTPOLE_SYSTEM: &str = "You are an expert-level game player. In the CartPole game, you control a cart that moves along a horizontal track. There is a pole standing upright on the cart. The goal of the game is to keep the pole balanced upright by moving the cart left or right. The game ends if the pole tilts too far from the vertical position or if the cart moves too far from the center of the track. The longer you can keep the pole balanced, the higher your score.Note that when the Cart Position is out of the (-2.4, 2.4) zone or the Pole Angle is out of the zone (-.2095, .2095), the round ends and the game is lost. The goal is to keep the pole balanced upright for as long as possible. \n\
Type '1' to push the cart to the left or '2' to push the cart to the right. Ensure you only provide the action number from the valid action list, i.e., [1, 2].";

const MOUNTAINCAR_SYSTEM: &str = "You are an expert-level game player. In the Mountain Car game, you control a car placed stochastically at the bottom of a sinusoidal valley. The only possible actions are the accelerations that can be applied to the car in either direction. The goal of the game is to strategically accelerate the car to reach the goal state on top of the right hill as quickly as possible. The episode ends if either the car reaches the goal position on top of the right hill or the length of the episode is 200. The goal is to reach the flag placed on top of the right hill as quickly as possible. \n\
Type '1' to accelerate to the left, '2' to not accelerate, or '3' to accelerate to the right.Ensure you only provide the action number from the valid action list, i.e., [1, 2, 3].";

const FROZENLAKE_SYSTEM: &str = "You are an expert-level game player. In the FrozenLake game, the player starts at the start position of the grid and tries to reach the goal position . There are holes which the player must avoid. The frozen lake is slippery, meaning that the player might not always move in the intended direction. The game ends when the player reaches the goal or falls into a hole. The goal is to navigate across the frozen lake and reach the goal position without falling into any holes. For current position ('x', 'y'), the action means the player try to step into the next position. The possible actions are: \n\
1: Move left, which means ('x', 'y-1'),\n\
2: Move down, which means ('x+1', 'y'),\n\
3: Move right, which means ('x', 'y+1'),\n\
4: Move up, which means trying to step into ('x-1', 'y').\n\
Ensure you only provide the action number from the valid action list, i.e., [1, 2, 3, 4]. Do not return the target's coordination.";

const PENDULUM_SYSTEM: &str = "You are an expert-level game player. In the Pendulum game, you control a pendulum attached to a fixed pivot point. The goal is to apply torques to swing the pendulum upright and keep it balanced. The game ends if the pendulum cannot be stabilized within the given time limit. The closer the pendulum is to the upright position, the higher your score. The goal is to swing the pendulum upright and keep it balanced. Provide a torque value (e.g., a float between -2.0 and 2.0) to control the pendulum's movement. Return the torque value enclosed in < and >, e.g., <1.5>.";

const GRID_TAIL: &str =
    "Return the action at the end of your answer without the target's location.";

const THINK: &str = "Think step by step.";

/// The fixed part of the system prompt for `kind`.
pub fn system_prompt(kind: EnvKind) -> &'static str {
    match kind {
        EnvKind::CartPole => CARTPOLE_SYSTEM,
        EnvKind::Pendulum => PENDULUM_SYSTEM,
        EnvKind::FrozenLake => FROZENLAKE_SYSTEM,
        EnvKind::CliffWalking => CLIFF_SYSTEM,
        EnvKind::MountainCar => MOUNTAINCAR_SYSTEM,
    }
}

/// Round to three decimals and drop trailing zeros: 0.040 -> "0.04".
pub fn short_number(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    match s {
        "-0" | "" => "0".to_string(),
        s => s.to_string(),
    }
}

fn side(v: f64) -> &'static str {
    if v > 0.0 {
        "right"
    } else {
        "left"
    }
}

/// Pendulum angle in (-pi, pi] recovered from the (cos, sin) features.
pub fn pendulum_angle(obs: &Observation) -> f64 {
    obs.values[1].atan2(obs.values[0])
}

/// The observation sentence shown to the model, ending with the
/// step-by-step cue.
pub fn user_message(kind: EnvKind, obs: &Observation) -> Result<String, PolicyError> {
    let v = &obs.values;
    let need = |n: usize| {
        if v.len() == n && v.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(PolicyError::InvalidObservation(kind))
        }
    };
    let text = match kind {
        EnvKind::CartPole => {
            need(4)?;
            format!(
                "The cart is positioned at {}, with a velocity of {} towards the {}. The pole is tilted at {} radians, rotating at {} radians per second towards the {}.",
                short_number(v[0]),
                short_number(v[1].abs()),
                side(v[1]),
                short_number(v[2]),
                short_number(v[3].abs()),
                side(v[3]),
            )
        }
        EnvKind::MountainCar => {
            need(2)?;
            format!(
                "The car is positioned at {:.3}, with a velocity of {:.3} towards the {}.",
                v[0],
                v[1].abs(),
                side(v[1])
            )
        }
        EnvKind::Pendulum => {
            need(3)?;
            let rotation = if v[2] > 0.0 {
                "clockwise"
            } else {
                "counter-clockwise"
            };
            format!(
                "The pendulum is at an angle of {:.3} radians from the vertical (zero when upright), rotating at {:.2} radians per second in the {rotation} direction.",
                pendulum_angle(obs),
                v[2].abs()
            )
        }
        EnvKind::FrozenLake => {
            let c = grid_cell(kind, obs)?;
            format!("You are at row {}, column {}.", c.row, c.col)
        }
        EnvKind::CliffWalking => {
            let c = grid_cell(kind, obs)?;
            format!("You are at location {c} in the grid world.")
        }
    };
    Ok(format!("{text}\n{THINK}"))
}

/// The grid cell carried by a grid observation.
pub fn grid_cell(kind: EnvKind, obs: &Observation) -> Result<GridCell, PolicyError> {
    let (rows, cols) = kind
        .grid_shape()
        .ok_or(PolicyError::InvalidObservation(kind))?;
    match obs.cell {
        Some(c) if c.row < rows && c.col < cols && obs.values.len() == rows * cols => Ok(c),
        _ => Err(PolicyError::InvalidObservation(kind)),
    }
}

/// Full system prompt: the fixed text, then for grid worlds the history and
/// the previous-step line.
pub fn system_message(kind: EnvKind, history: Option<&EnvHistory>) -> String {
    let base = system_prompt(kind);
    if !kind.is_grid() {
        return base.to_string();
    }
    let mut out = base.to_string();
    let rendered = history.map(|h| h.render()).unwrap_or_default();
    let previous = history.and_then(|h| h.previous()).map(|p| {
        format!(
            "Previous location: {}, previous action: {}, previous reward: {}.",
            p.cell,
            p.action,
            format_reward(kind, p.reward)
        )
    });
    if !rendered.is_empty() || previous.is_some() {
        out.push_str(" Environment history:");
        if !rendered.is_empty() {
            out.push(' ');
            out.push_str(&rendered);
        }
        if let Some(p) = previous {
            out.push(' ');
            out.push_str(&p);
        }
        out.push(' ');
    }
    out.push(' ');
    out.push_str(GRID_TAIL);
    out
}

/// Prompt for the current observation. `history` is only consulted for the
/// grid worlds.
pub fn build_prompt(
    kind: EnvKind,
    obs: &Observation,
    history: Option<&EnvHistory>,
    model: &str,
) -> Result<ChatRequest, PolicyError> {
    let user = user_message(kind, obs)?;
    Ok(ChatRequest::new(model, system_message(kind, history), user))
}
