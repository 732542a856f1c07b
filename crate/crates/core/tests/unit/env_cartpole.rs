use loro_core::env::cartpole::*;
use loro_core::env::{env_reset, Action, EnvKind, EnvState, MdpSpec};

#[test]
fn right_push_from_rest() {
    let next = transition(CartPoleState::default(), true);
    assert_eq!(next.x, 0.0);
    assert!((next.x_dot - 0.1951).abs() < 1e-4);
    assert_eq!(next.theta, 0.0);
    assert!((next.theta_dot + 0.2927).abs() < 1e-4);
}

#[test]
fn unit_reward_and_not_terminated_near_center() {
    for a in [LEFT, RIGHT] {
        let (mut env, _) = env_reset(MdpSpec::new(EnvKind::CartPole), 0);
        env.set_state(EnvState::CartPole(CartPoleState::new(
            0.006, 0.04, 0.02, 0.02,
        )));
        let r = env.step(&Action::Discrete(a)).unwrap();
        assert_eq!(r.reward, 1.0);
        assert!(!r.terminated);
    }
}

#[test]
fn large_angle_terminates() {
    let (mut env, _) = env_reset(MdpSpec::new(EnvKind::CartPole), 0);
    // theta_dot chosen so that theta lands on 0.25 after one step.
    env.set_state(EnvState::CartPole(CartPoleState::new(0.0, 0.0, 0.2, 2.5)));
    let r = env.step(&Action::Discrete(RIGHT)).unwrap();
    assert!((r.next_obs.values[2] - 0.25).abs() < 1e-12);
    assert!(r.terminated);
    assert!(!r.truncated);
}
