use loro_core::env::{EnvKind, GridCell, Observation};
use loro_core::policy::history::EnvHistory;
use loro_core::policy::history::{HistoryMode, PreviousStep, Visit};
use loro_core::policy::prompt::*;

#[test]
fn cartpole_user_text() {
    let obs = Observation::vector(vec![0.006, 0.04, 0.02, 0.02]);
    assert_eq!(
        user_message(EnvKind::CartPole, &obs).unwrap(),
        "The cart is positioned at 0.006, with a velocity of 0.04 towards the right. \
         The pole is tilted at 0.02 radians, rotating at 0.02 radians per second towards the right.\n\
         Think step by step."
    );
}

#[test]
fn mountaincar_and_pendulum_user_text() {
    let obs = Observation::vector(vec![-0.5412, 0.0]);
    assert_eq!(
        user_message(EnvKind::MountainCar, &obs).unwrap(),
        "The car is positioned at -0.541, with a velocity of 0.000 towards the left.\nThink step by step."
    );
    let theta: f64 = -2.69;
    let obs = Observation::vector(vec![theta.cos(), theta.sin(), 0.34]);
    assert_eq!(
        user_message(EnvKind::Pendulum, &obs).unwrap(),
        "The pendulum is at an angle of -2.690 radians from the vertical (zero when upright), \
         rotating at 0.34 radians per second in the clockwise direction.\nThink step by step."
    );
}

#[test]
fn grid_user_text() {
    let obs = Observation::grid(GridCell::new(0, 0), 4, 4);
    assert!(user_message(EnvKind::FrozenLake, &obs)
        .unwrap()
        .starts_with("You are at row 0, column 0.\n"));
    let obs = Observation::grid(GridCell::new(2, 0), 4, 12);
    assert_eq!(
        user_message(EnvKind::CliffWalking, &obs).unwrap(),
        "You are at location (2, 0) in the grid world.\nThink step by step."
    );
    assert!(user_message(EnvKind::CliffWalking, &Observation::vector(vec![0.0])).is_err());
}

#[test]
fn cliff_system_prompt_with_history() {
    let mut h = EnvHistory::new(EnvKind::CliffWalking, HistoryMode::Summary);
    for (r, c, reward, hazard) in [
        (3, 0, -100.0, true),
        (2, 0, -1.0, false),
        (3, 0, -1.0, false),
        (1, 0, -1.0, false),
    ] {
        h.push_visit(Visit {
            cell: GridCell::new(r, c),
            reward,
            hazard,
        });
    }
    h.set_previous(Some(PreviousStep {
        cell: GridCell::new(1, 0),
        action: 1,
        reward: -1.0,
    }));
    let s = system_message(EnvKind::CliffWalking, Some(&h));
    assert!(s.ends_with(
        "i.e., [1, 2, 3, 4]. Environment history: Cliff: Reward -100 at locations: (3, 0). \
         Reward -1 at locations: (2, 0), (3, 0), (1, 0). Previous location: (1, 0), previous action: 1, \
         previous reward: -1.  Return the action at the end of your answer without the target's location."
    ));
}

#[test]
fn grid_prompt_without_history() {
    let s = system_message(EnvKind::FrozenLake, None);
    assert!(s.ends_with(
        "Do not return the target's coordination. Return the action at the end of your answer without the target's location."
    ));
    assert_eq!(system_message(EnvKind::CartPole, None), CARTPOLE_SYSTEM);
}

#[test]
fn request_defaults_and_json() {
    let obs = Observation::vector(vec![0.0, 0.0, 0.0, 0.0]);
    let req = build_prompt(EnvKind::CartPole, &obs, None, "m").unwrap();
    assert_eq!(req.messages[0].role, Role::System);
    let v: serde_json::Value = serde_json::from_str(&req.to_json()).unwrap();
    assert_eq!(v["temperature"], 0.9);
    assert_eq!(v["top_p"], 0.6);
    assert_eq!(v["max_tokens"], 2000);
    assert!(v.get("top_k").is_none());
    assert_eq!(v["messages"][1]["role"], "user");
}

#[test]
fn short_numbers() {
    assert_eq!(short_number(0.04), "0.04");
    assert_eq!(short_number(-0.0001), "0");
    assert_eq!(short_number(1.0), "1");
    assert_eq!(short_number(-0.1234), "-0.123");
}
