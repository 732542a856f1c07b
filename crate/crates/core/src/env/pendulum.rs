//! Torque-limited pendulum swing-up. Angle 0 is upright.

use std::f64::consts::PI;

pub const GRAVITY: f64 = 10.0;
pub const MASS: f64 = 1.0;
pub const LENGTH: f64 = 1.0;
pub const DT: f64 = 0.05;
pub const MAX_SPEED: f64 = 8.0;
pub const MAX_TORQUE: f64 = 2.0;
/// Largest per-step cost: pi^2 + 0.1 * 8^2 + 0.001 * 2^2.
pub const MAX_COST: f64 = PI * PI + 0.1 * MAX_SPEED * MAX_SPEED + 0.001 * MAX_TORQUE * MAX_TORQUE;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PendulumState {
    pub theta: f64,
    pub theta_dot: f64,
}

impl PendulumState {
    pub fn new(theta: f64, theta_dot: f64) -> Self {
        PendulumState { theta, theta_dot }
    }

    /// `(x, y, theta_dot)` with `x = cos(theta)`, `y = sin(theta)`.
    pub fn observation(self) -> [f64; 3] {
        [self.theta.cos(), self.theta.sin(), self.theta_dot]
    }
}

/// Wrap an angle into `[-pi, pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    (theta + PI).rem_euclid(2.0 * PI) - PI
}

pub fn clamp_torque(u: f64) -> f64 {
    u.clamp(-MAX_TORQUE, MAX_TORQUE)
}

/// Reward for being in `s` and applying the (already clamped) torque `u`.
pub fn reward(s: PendulumState, u: f64) -> f64 {
    let th = normalize_angle(s.theta);
    -(th * th + 0.1 * s.theta_dot * s.theta_dot + 0.001 * u * u)
}

/// One integration step; returns the next state and the reward of `s`.
pub fn transition(s: PendulumState, torque: f64) -> (PendulumState, f64) {
    let u = clamp_torque(torque);
    let r = reward(s, u);
    let acc = 3.0 * GRAVITY / (2.0 * LENGTH) * s.theta.sin() + 3.0 / (MASS * LENGTH * LENGTH) * u;
    let theta_dot = (s.theta_dot + acc * DT).clamp(-MAX_SPEED, MAX_SPEED);
    let theta = s.theta + theta_dot * DT;
    (PendulumState { theta, theta_dot }, r)
}
