//! Hand-written policies that stand in for the language model in offline runs.
//! They are decent but not optimal, so online learning still has work to do.

use crate::env::{cliffwalking as cw, frozenlake as fl, pendulum, Action, EnvKind, Observation};

use super::prompt::{grid_cell, pendulum_angle};
use super::PolicyError;

/// Upright energy 0.5*w^2 + (3g/2l)*cos(theta) at theta = 0, w = 0.
const UPRIGHT_ENERGY: f64 = 15.0;

/// Internal action index (0-based) chosen by the script.
pub fn scripted_act(kind: EnvKind, obs: &Observation) -> Result<Action, PolicyError> {
    let v = &obs.values;
    let bad = || PolicyError::InvalidObservation(kind);
    Ok(match kind {
        EnvKind::CartPole => {
            if v.len() != 4 {
                return Err(bad());
            }
            Action::Discrete(usize::from(v[2] + 0.5 * v[3] > 0.0))
        }
        EnvKind::MountainCar => {
            if v.len() != 2 {
                return Err(bad());
            }
            Action::Discrete(if v[1] > 0.0 { 2 } else { 0 })
        }
        EnvKind::Pendulum => {
            if v.len() != 3 {
                return Err(bad());
            }
            let theta = pendulum_angle(obs);
            let w = v[2];
            let energy = 0.5 * w * w + UPRIGHT_ENERGY * theta.cos();
            let u = if energy < UPRIGHT_ENERGY {
                if w < 0.0 {
                    -pendulum::MAX_TORQUE
                } else {
                    pendulum::MAX_TORQUE
                }
            } else {
                pendulum::clamp_torque(-(2.0 * theta + 0.5 * w))
            };
            Action::Continuous(vec![u])
        }
        EnvKind::CliffWalking => {
            let c = grid_cell(kind, obs)?;
            Action::Discrete(if c.row == cw::ROWS - 1 {
                cw::UP
            } else if c.row == cw::ROWS - 2 {
                if c.col == cw::COLS - 1 {
                    cw::DOWN
                } else {
                    cw::RIGHT
                }
            } else {
                cw::DOWN
            })
        }
        EnvKind::FrozenLake => {
            let c = grid_cell(kind, obs)?;
            Action::Discrete(FROZEN_LAKE_PLAN[c.row][c.col])
        }
    })
}

/// Safe route (0,0) down to (2,0), right to (2,2), down to (3,2), right to
/// the goal; other cells lead back onto it. Holes and the goal are terminal,
/// their entries are never used.
pub const FROZEN_LAKE_PLAN: [[usize; fl::COLS]; fl::ROWS] = [
    [fl::DOWN, fl::LEFT, fl::DOWN, fl::LEFT],
    [fl::DOWN, fl::LEFT, fl::DOWN, fl::LEFT],
    [fl::RIGHT, fl::RIGHT, fl::DOWN, fl::LEFT],
    [fl::LEFT, fl::RIGHT, fl::RIGHT, fl::LEFT],
];
