//! Quick oracle checks behind `loro verify`. Each check recomputes its
//! expectation from first principles rather than through the code under test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::{epsilon_greedy, DdqnAgent, Hyperparams};
use crate::env::{Action, Env, EnvKind, EnvState, GridCell, MdpSpec, Observation};
use crate::nn::Mlp;
use crate::policy::extract::{extract_discrete_action, extract_torque};
use crate::replay::{ReplayBuffer, SourceTag, Transition};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

fn param_mut(net: &mut Mlp, layer: usize, weight: Option<(usize, usize)>, bias: usize) -> &mut f64 {
    let l = &mut net.layers_mut()[layer];
    match weight {
        Some(ix) => &mut l.weights[ix],
        None => &mut l.bias[bias],
    }
}

/// Largest relative error between backprop and central differences over
/// `nets` random networks. The loss is a fixed random linear functional of
/// the output.
pub fn gradient_check(nets: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..nets {
        let sizes = [
            rng.random_range(1..=8),
            rng.random_range(1..=16),
            rng.random_range(1..=16),
            rng.random_range(1..=8),
        ];
        let mut net = Mlp::new(&sizes, &mut rng).expect("valid sizes");
        let batch = rng.random_range(1..=4);
        let x = ndarray::Array2::from_shape_fn((batch, sizes[0]), |_| rng.random_range(-2.0..2.0));
        let w = ndarray::Array2::from_shape_fn((batch, sizes[3]), |_| rng.random_range(-1.0..1.0));
        let loss = |n: &Mlp| (n.predict_batch(x.view()).expect("shape") * &w).sum();
        let cache = net.forward_batch(x.view()).expect("shape");
        let grads = net.backward(&cache, w.view()).expect("shape");
        for l in 0..net.layers().len() {
            let (rows, cols) = net.layers()[l].weights.dim();
            let mut params: Vec<(Option<(usize, usize)>, usize)> = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    params.push((Some((r, c)), 0));
                }
                params.push((None, r));
            }
            for (wc, b) in params {
                let analytic = match wc {
                    Some(ix) => grads.layers[l].weights[ix],
                    None => grads.layers[l].bias[b],
                };
                let orig = *param_mut(&mut net, l, wc, b);
                *param_mut(&mut net, l, wc, b) = orig + h;
                let up = loss(&net);
                *param_mut(&mut net, l, wc, b) = orig - h;
                let down = loss(&net);
                *param_mut(&mut net, l, wc, b) = orig;
                let numeric = (up - down) / (2.0 * h);
                let scale = analytic.abs().max(numeric.abs());
                let err = if scale < 1e-7 {
                    0.0
                } else {
                    (analytic - numeric).abs() / scale
                };
                worst = worst.max(err);
            }
        }
    }
    worst
}

/// CliffWalking and deterministic FrozenLake against hand-coded grid rules.
pub fn grid_table_mismatches() -> usize {
    let mut bad = 0;
    // Cliff: start (3,0), goal (3,11), cliff (3,1..=10); up, right, down, left.
    let mut env = Env::new(MdpSpec::new(EnvKind::CliffWalking), 0);
    for r in 0..4i64 {
        for c in 0..12i64 {
            for a in 0..4usize {
                let (dr, dc) = [(-1, 0), (0, 1), (1, 0), (0, -1)][a];
                let (nr, nc) = ((r + dr).clamp(0, 3), (c + dc).clamp(0, 11));
                let (expect, reward, done) = if nr == 3 && (1..=10).contains(&nc) {
                    ((3, 0), -100.0, false)
                } else {
                    ((nr, nc), -1.0, nr == 3 && nc == 11)
                };
                env.set_state(EnvState::Grid(GridCell::new(r as usize, c as usize)));
                let s = env.step(&Action::Discrete(a)).expect("valid action");
                let got = s.next_obs.cell.expect("grid obs");
                if (got.row as i64, got.col as i64) != expect
                    || s.reward != reward
                    || s.terminated != done
                {
                    bad += 1;
                }
            }
        }
    }
    // Lake: left, down, right, up.
    let map = ["SFFF", "FHFH", "FFFH", "HFFG"];
    let mut env = Env::new(MdpSpec::new(EnvKind::FrozenLake).with_slippery(false), 0);
    for r in 0..4i64 {
        for c in 0..4i64 {
            let here = map[r as usize].as_bytes()[c as usize];
            if here == b'H' || here == b'G' {
                continue;
            }
            for a in 0..4usize {
                let (dr, dc) = [(0, -1), (1, 0), (0, 1), (-1, 0)][a];
                let (nr, nc) = ((r + dr).clamp(0, 3), (c + dc).clamp(0, 3));
                let tile = map[nr as usize].as_bytes()[nc as usize];
                let reward = if tile == b'G' { 1.0 } else { 0.0 };
                let done = tile == b'G' || tile == b'H';
                env.set_state(EnvState::Grid(GridCell::new(r as usize, c as usize)));
                let s = env.step(&Action::Discrete(a)).expect("valid action");
                let got = s.next_obs.cell.expect("grid obs");
                if (got.row as i64, got.col as i64) != (nr, nc)
                    || s.reward != reward
                    || s.terminated != done
                {
                    bad += 1;
                }
            }
        }
    }
    bad
}

const RESPONSES: [(&str, &str); 7] = [
    (
        "frozenlake_cot",
        include_str!("../tests/fixtures/responses/frozenlake_cot.txt"),
    ),
    (
        "frozenlake_long_cot",
        include_str!("../tests/fixtures/responses/frozenlake_long_cot.txt"),
    ),
    (
        "cliffwalking",
        include_str!("../tests/fixtures/responses/cliffwalking.txt"),
    ),
    (
        "cartpole",
        include_str!("../tests/fixtures/responses/cartpole.txt"),
    ),
    (
        "mountaincar",
        include_str!("../tests/fixtures/responses/mountaincar.txt"),
    ),
    ("pong", include_str!("../tests/fixtures/responses/pong.txt")),
    (
        "pendulum",
        include_str!("../tests/fixtures/responses/pendulum.txt"),
    ),
];

/// Sample completions that fail to parse to their stated action.
pub fn extraction_failures() -> Vec<&'static str> {
    let expected: [(&str, &[i64], i64); 6] = [
        ("frozenlake_cot", &[1, 2, 3, 4], 2),
        ("frozenlake_long_cot", &[1, 2, 3, 4], 1),
        ("cliffwalking", &[1, 2, 3, 4], 1),
        ("cartpole", &[1, 2], 1),
        ("mountaincar", &[1, 2, 3], 3),
        ("pong", &[1, 3, 4], 3),
    ];
    let mut failed = Vec::new();
    for (name, text) in RESPONSES {
        let ok = match expected.iter().find(|e| e.0 == name) {
            Some((_, valid, want)) => extract_discrete_action(text, valid) == Ok(*want),
            None => extract_torque(text).ok() == Some(1.0),
        };
        if !ok {
            failed.push(name);
        }
    }
    failed
}

/// Frequency of the greedy action under ε = 0.1 with three actions.
pub fn greedy_frequency(draws: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = [0.0, 5.0, 1.0];
    (0..draws)
        .filter(|_| epsilon_greedy(&q, 0.1, &mut rng) == 1)
        .count() as f64
        / draws as f64
}

fn marker(i: usize) -> Transition {
    let o = Observation::vector(vec![i as f64]);
    Transition {
        obs: o.clone(),
        action: Action::Discrete(0),
        reward: 0.0,
        next_obs: o,
        terminated: false,
        truncated: false,
        source: SourceTag::Online,
        episode: 0,
        step: i,
    }
}

/// FIFO eviction and uniform sampling over a 4-slot buffer.
pub fn replay_check(samples: usize, seed: u64) -> (bool, f64) {
    let mut buf = ReplayBuffer::new(3, seed);
    for i in 1..=4 {
        buf.push(marker(i));
    }
    let fifo = buf.iter().map(|t| t.step).eq([2, 3, 4]);
    let mut buf = ReplayBuffer::new(4, seed);
    for i in 0..4 {
        buf.push(marker(i));
    }
    let mut counts = [0usize; 4];
    for t in buf.sample(samples).expect("non-empty") {
        counts[t.step] += 1;
    }
    let worst = counts
        .iter()
        .map(|&c| (c as f64 / samples as f64 - 0.25).abs())
        .fold(0.0, f64::max);
    (fifo, worst)
}

/// Five-state chain: action 1 moves right, action 0 moves left (state 0
/// stays). Moving right from state 4 pays 1 and terminates; everything else
/// pays 0.
pub fn chain_transitions() -> Vec<Transition> {
    let one_hot = |s: usize| {
        let mut v = vec![0.0; 5];
        v[s] = 1.0;
        Observation::vector(v)
    };
    let mut out = Vec::new();
    for s in 0..5usize {
        for a in 0..2usize {
            let (next, reward, done) = match (s, a) {
                (4, 1) => (4, 1.0, true),
                (_, 1) => (s + 1, 0.0, false),
                (_, _) => (s.saturating_sub(1), 0.0, false),
            };
            out.push(Transition {
                obs: one_hot(s),
                action: Action::Discrete(a),
                reward,
                next_obs: one_hot(next),
                terminated: done,
                truncated: false,
                source: SourceTag::Online,
                episode: 0,
                step: out.len(),
            });
        }
    }
    out
}

/// Value iteration on the chain with discount `gamma`; `q[s][a]`.
pub fn chain_value_iteration(gamma: f64) -> [[f64; 2]; 5] {
    let mut q = [[0.0f64; 2]; 5];
    for _ in 0..1000 {
        let v: Vec<f64> = q.iter().map(|r| r[0].max(r[1])).collect();
        for (s, row) in q.iter_mut().enumerate() {
            row[0] = gamma * v[s.saturating_sub(1)];
            row[1] = if s == 4 { 1.0 } else { gamma * v[s + 1] };
        }
    }
    q
}

/// Train DDQN on every chain transition; returns (greedy actions agree,
/// largest |Q - Q*|).
pub fn chain_check(updates: usize, hp: &Hyperparams, seed: u64) -> (bool, f64) {
    let mut agent = DdqnAgent::new(5, 2, hp, seed).expect("valid hyperparameters");
    let mut buf = ReplayBuffer::new(hp.buffer_capacity, seed ^ 1);
    buf.extend(chain_transitions());
    for _ in 0..updates {
        agent.update(&mut buf).expect("non-empty buffer");
    }
    let truth = chain_value_iteration(hp.gamma);
    let mut agree = true;
    let mut worst: f64 = 0.0;
    for (s, want) in truth.iter().enumerate() {
        let mut x = vec![0.0; 5];
        x[s] = 1.0;
        let q = agent.q_values(&x).expect("shape");
        agree &= (q[1] > q[0]) == (want[1] > want[0]);
        worst = worst
            .max((q[0] - want[0]).abs())
            .max((q[1] - want[1]).abs());
    }
    (agree, worst)
}

/// Everything `loro verify` runs.
pub fn run_all() -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let g = gradient_check(50, 7);
    out.push(CheckOutcome::new(
        "gradients match central differences",
        g <= 1e-4,
        format!("max relative error {g:.2e}"),
    ));
    let m = grid_table_mismatches();
    out.push(CheckOutcome::new(
        "grid transition tables",
        m == 0,
        format!("{m} mismatching state-action pairs"),
    ));
    let f = extraction_failures();
    out.push(CheckOutcome::new(
        "sample completions parse",
        f.is_empty(),
        format!("failed: {f:?}"),
    ));
    let p = greedy_frequency(30_000, 11);
    out.push(CheckOutcome::new(
        "epsilon-greedy frequency",
        (p - (0.9 + 0.1 / 3.0)).abs() <= 0.01,
        format!("greedy share {p:.4}"),
    ));
    let (fifo, dev) = replay_check(40_000, 3);
    out.push(CheckOutcome::new(
        "replay FIFO and uniform sampling",
        fifo && dev <= 0.01,
        format!("fifo {fifo}, max frequency deviation {dev:.4}"),
    ));
    let hp = Hyperparams {
        gamma: 0.9,
        ..Hyperparams::default()
    };
    let (agree, err) = chain_check(20_000, &hp, 5);
    out.push(CheckOutcome::new(
        "DDQN matches value iteration on a chain",
        agree && err <= 0.05,
        format!("greedy agrees {agree}, max |Q - Q*| {err:.4}"),
    ));
    out
}
