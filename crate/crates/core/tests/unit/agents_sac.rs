use loro_core::agents::Hyperparams;
use loro_core::agents::*;
use loro_core::env::{Action, Observation};
use loro_core::nn::Dense;
use loro_core::nn::Mlp;
use loro_core::replay::SourceTag;
use loro_core::replay::{ReplayBuffer, Transition};
use ndarray::array;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn agent() -> SacAgent {
    SacAgent::new(3, 1, 2.0, &Hyperparams::default(), 0).unwrap()
}

fn constant_net(inputs: usize, value: f64) -> Mlp {
    Mlp::from_layers(vec![Dense {
        weights: Array2::zeros((1, inputs)),
        bias: array![value],
    }])
    .unwrap()
}

fn transition(reward: f64, terminated: bool) -> Transition {
    Transition {
        obs: Observation::vector(vec![1.0, 0.0, 0.0]),
        action: Action::Continuous(vec![0.5]),
        reward,
        next_obs: Observation::vector(vec![0.0, 1.0, 0.2]),
        terminated,
        truncated: false,
        source: SourceTag::Online,
        episode: 0,
        step: 0,
    }
}

#[test]
fn stable_log_jacobian() {
    for u in [-30.0, -3.0, -0.5, 0.0, 0.7, 4.0, 25.0] {
        let t: f64 = f64::tanh(u);
        let naive = (1.0 - t * t).ln();
        if naive.is_finite() && u.abs() < 15.0 {
            assert!((log_one_minus_tanh_sq(u) - naive).abs() < 1e-9);
        }
        assert!(log_one_minus_tanh_sq(u).is_finite());
    }
}

#[test]
fn deterministic_zero_mean_gives_zero_action() {
    let mut a = agent();
    a.policy_mut()
        .layers_mut()
        .last_mut()
        .unwrap()
        .weights
        .fill(0.0);
    a.policy_mut()
        .layers_mut()
        .last_mut()
        .unwrap()
        .bias
        .fill(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (act, _) = a.sample_action(&[0.3, 0.4, 0.5], &mut rng, true).unwrap();
    assert_eq!(act, vec![0.0]);
}

#[test]
fn actions_strictly_inside_bounds() {
    let a = agent();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..2000 {
        let obs: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
        let (act, lp) = a.sample_action(&obs, &mut rng, false).unwrap();
        assert!(act[0] > -2.0 && act[0] < 2.0);
        assert!(lp.is_finite());
    }
}

#[test]
fn twin_min_and_zero_discount_targets() {
    let mut a = agent();
    let [_, _, t1, t2] = a.critics_mut();
    *t1 = constant_net(4, 5.0);
    *t2 = constant_net(4, 3.0);
    a.set_alpha(1e-300);
    a.gamma = 1.0;
    let t = transition(0.0, false);
    let y = a.critic_targets(&[&t]).unwrap();
    assert!((y[0] - 3.0).abs() < 1e-9);

    a.gamma = 0.0;
    let ts = [transition(-1.5, false), transition(2.0, true)];
    let refs: Vec<&Transition> = ts.iter().collect();
    assert_eq!(a.critic_targets(&refs).unwrap(), vec![-1.5, 2.0]);
}

#[test]
fn update_keeps_parameters_finite() {
    let mut a = agent();
    let mut buf = ReplayBuffer::new(64, 0);
    for i in 0..64 {
        buf.push(transition(-(i as f64) / 10.0, i % 7 == 0));
    }
    for _ in 0..20 {
        let l = a.update(&mut buf).unwrap();
        assert!(l.q_loss.is_finite() && l.policy_loss.is_finite() && l.alpha_loss.is_finite());
    }
    assert_eq!(a.update_count(), 20);
    assert!(a.networks().iter().all(|(_, n)| n.is_finite()));
}

#[test]
fn unit_tau_soft_update_copies_critics() {
    let hp = Hyperparams {
        soft_update_tau: 1.0,
        batch_size: 4,
        ..Default::default()
    };
    let mut a = SacAgent::new(3, 1, 2.0, &hp, 0).unwrap();
    let mut buf = ReplayBuffer::new(8, 0);
    buf.push(transition(-1.0, false));
    a.update(&mut buf).unwrap();
    let net = |name: &str| {
        a.networks()
            .into_iter()
            .find(|(n, _)| *n == name)
            .unwrap()
            .1
            .clone()
    };
    assert_eq!(net("q1"), net("q1_target"));
    assert_eq!(net("q2"), net("q2_target"));
}
