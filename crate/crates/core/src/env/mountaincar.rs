//! Under-powered car in a sinusoidal valley.

pub const MIN_POSITION: f64 = -1.2;
pub const MAX_POSITION: f64 = 0.6;
pub const MAX_SPEED: f64 = 0.07;
pub const GOAL_POSITION: f64 = 0.5;
pub const FORCE: f64 = 0.001;
pub const GRAVITY: f64 = 0.0025;

pub const ACCEL_LEFT: usize = 0;
pub const COAST: usize = 1;
pub const ACCEL_RIGHT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MountainCarState {
    pub position: f64,
    pub velocity: f64,
}

impl MountainCarState {
    pub fn new(position: f64, velocity: f64) -> Self {
        MountainCarState { position, velocity }
    }

    pub fn at_goal(&self) -> bool {
        self.position >= GOAL_POSITION
    }
}

/// `action` is 0 (left), 1 (coast) or 2 (right).
pub fn transition(s: MountainCarState, action: usize) -> MountainCarState {
    let push = action as f64 - 1.0;
    let mut velocity = (s.velocity + push * FORCE - GRAVITY * (3.0 * s.position).cos())
        .clamp(-MAX_SPEED, MAX_SPEED);
    let position = (s.position + velocity).clamp(MIN_POSITION, MAX_POSITION);
    if position == MIN_POSITION && velocity < 0.0 {
        velocity = 0.0;
    }
    MountainCarState { position, velocity }
}

/// -1 per step; the goal-reaching step pays 0.
pub fn reward(reached_goal: bool) -> f64 {
    if reached_goal {
        0.0
    } else {
        -1.0
    }
}
