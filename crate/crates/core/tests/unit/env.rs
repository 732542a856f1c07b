use loro_core::env::*;

#[test]
fn reset_start_cells() {
    for seed in 0..5 {
        let (_, obs) = env_reset(MdpSpec::new(EnvKind::CliffWalking), seed);
        assert_eq!(obs.cell, Some(GridCell::new(3, 0)));
        let (_, obs) = env_reset(MdpSpec::new(EnvKind::FrozenLake), seed);
        assert_eq!(obs.cell, Some(GridCell::new(0, 0)));
    }
}

#[test]
fn cartpole_reset_is_seeded() {
    let (_, a) = env_reset(MdpSpec::new(EnvKind::CartPole), 17);
    let (_, b) = env_reset(MdpSpec::new(EnvKind::CartPole), 17);
    let (_, c) = env_reset(MdpSpec::new(EnvKind::CartPole), 18);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.values.iter().all(|v| v.abs() <= 0.05));
}

#[test]
fn default_horizons() {
    let h = |k| MdpSpec::new(k).horizon;
    assert_eq!(h(EnvKind::CartPole), 500);
    assert_eq!(h(EnvKind::Pendulum), 200);
    assert_eq!(h(EnvKind::FrozenLake), 100);
    assert_eq!(h(EnvKind::CliffWalking), 200);
    assert_eq!(h(EnvKind::MountainCar), 200);
    for k in EnvKind::ALL {
        MdpSpec::new(k).validate().unwrap();
    }
}

#[test]
fn invalid_specs_rejected() {
    assert!(MdpSpec::new(EnvKind::CartPole)
        .with_horizon(0)
        .validate()
        .is_err());
    let mut spec = MdpSpec::new(EnvKind::CartPole);
    spec.action_space = ActionSpace::Discrete(1);
    assert!(spec.validate().is_err());
    let mut spec = MdpSpec::new(EnvKind::Pendulum);
    spec.action_space = ActionSpace::Continuous {
        low: vec![1.0],
        high: vec![1.0],
    };
    assert!(spec.validate().is_err());
}

#[test]
fn invalid_action_rejected() {
    let (mut env, _) = env_reset(MdpSpec::new(EnvKind::CartPole), 0);
    assert!(matches!(
        env.step(&Action::Discrete(2)),
        Err(EnvError::InvalidAction { .. })
    ));
    assert!(env.step(&Action::Continuous(vec![0.0])).is_err());
    let (mut env, _) = env_reset(MdpSpec::new(EnvKind::CliffWalking), 0);
    assert!(env.step(&Action::Discrete(4)).is_err());
    let (mut env, _) = env_reset(MdpSpec::new(EnvKind::MountainCar), 0);
    assert!(env.step(&Action::Discrete(3)).is_err());
}

#[test]
fn truncation_at_horizon() {
    let spec = MdpSpec::new(EnvKind::CliffWalking).with_horizon(5);
    let (mut env, _) = env_reset(spec, 0);
    for i in 1..=5 {
        // Bumping the top wall never terminates.
        let r = env.step(&Action::Discrete(cliffwalking::UP)).unwrap();
        assert!(!r.terminated);
        assert_eq!(r.truncated, i == 5);
    }
    assert_eq!(
        env.step(&Action::Discrete(0)),
        Err(EnvError::EpisodeFinished)
    );
    env.reset();
    assert_eq!(env.episode_steps(), 0);
    assert_eq!(env.total_steps(), 5);
}

#[test]
fn terminated_step_is_not_truncated() {
    let spec = MdpSpec::new(EnvKind::FrozenLake)
        .with_slippery(false)
        .with_horizon(2);
    let (mut env, _) = env_reset(spec, 0);
    env.step(&Action::Discrete(frozenlake::RIGHT)).unwrap();
    // (0,1) -> (1,1) is a hole, reached exactly at the horizon.
    let r = env.step(&Action::Discrete(frozenlake::DOWN)).unwrap();
    assert!(r.terminated);
    assert!(!r.truncated);
}

#[test]
fn env_kind_parsing() {
    assert_eq!("CartPole".parse::<EnvKind>().unwrap(), EnvKind::CartPole);
    assert_eq!(
        "mountain_car".parse::<EnvKind>().unwrap(),
        EnvKind::MountainCar
    );
    assert!("pong".parse::<EnvKind>().is_err());
}

#[test]
fn observation_from_values_recovers_cell() {
    let obs = Observation::grid(GridCell::new(2, 7), 4, 12);
    let back = Observation::from_values(EnvKind::CliffWalking, obs.values.clone());
    assert_eq!(back, obs);
}
