//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use loro_core::nn::Mlp;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RESPONSE_FROZENLAKE_COT: &str = include_str!("../fixtures/responses/frozenlake_cot.txt");
pub const RESPONSE_FROZENLAKE_LONG_COT: &str =
    include_str!("../fixtures/responses/frozenlake_long_cot.txt");
pub const RESPONSE_CLIFFWALKING: &str = include_str!("../fixtures/responses/cliffwalking.txt");
pub const RESPONSE_CARTPOLE: &str = include_str!("../fixtures/responses/cartpole.txt");
pub const RESPONSE_MOUNTAINCAR: &str = include_str!("../fixtures/responses/mountaincar.txt");
pub const RESPONSE_PONG: &str = include_str!("../fixtures/responses/pong.txt");
pub const RESPONSE_PENDULUM: &str = include_str!("../fixtures/responses/pendulum.txt");

// ---- continuous dynamics, written out from the textbook equations ----

/// Cart-pole, explicit Euler, force +-10, dt 0.02. State (x, x', th, th').
pub fn cartpole_oracle(s: [f64; 4], right: bool) -> [f64; 4] {
    let (g, mc, mp, l, dt) = (9.8, 1.0, 0.1, 0.5, 0.02);
    let f = if right { 10.0 } else { -10.0 };
    let [x, xd, th, thd] = s;
    let m = mc + mp;
    let tmp = (f + mp * l * thd * thd * th.sin()) / m;
    let thacc = (g * th.sin() - th.cos() * tmp) / (l * (4.0 / 3.0 - mp * th.cos().powi(2) / m));
    let xacc = tmp - mp * l * thacc * th.cos() / m;
    [x + dt * xd, xd + dt * xacc, th + dt * thd, thd + dt * thacc]
}

/// Mountain car with actions 0/1/2 = push left/none/right.
pub fn mountaincar_oracle(p: f64, v: f64, a: usize) -> (f64, f64) {
    let mut v2 = v + (a as f64 - 1.0) * 0.001 + (3.0 * p).cos() * (-0.0025);
    v2 = v2.max(-0.07).min(0.07);
    let mut p2 = p + v2;
    p2 = p2.max(-1.2).min(0.6);
    if p2 == -1.2 && v2 < 0.0 {
        v2 = 0.0;
    }
    (p2, v2)
}

/// Pendulum (g = 10, m = l = 1, dt = 0.05): next (theta, omega) and the reward
/// of the pre-step state.
pub fn pendulum_oracle(th: f64, om: f64, u: f64) -> (f64, f64, f64) {
    let pi = std::f64::consts::PI;
    let u = u.max(-2.0).min(2.0);
    let mut wrapped = (th + pi) % (2.0 * pi);
    if wrapped < 0.0 {
        wrapped += 2.0 * pi;
    }
    let wrapped = wrapped - pi;
    let cost = wrapped * wrapped + 0.1 * om * om + 0.001 * u * u;
    let om2 = (om + (3.0 * 10.0 / 2.0 * th.sin() + 3.0 * u) * 0.05)
        .max(-8.0)
        .min(8.0);
    (th + om2 * 0.05, om2, -cost)
}

// ---- grid worlds ----

/// CliffWalking: actions up/right/down/left. Returns ((row, col), reward, done).
pub fn cliff_oracle(r: usize, c: usize, a: usize) -> ((usize, usize), f64, bool) {
    let (mut nr, mut nc) = (r as i32, c as i32);
    match a {
        0 => nr -= 1,
        1 => nc += 1,
        2 => nr += 1,
        _ => nc -= 1,
    }
    if !(0..4).contains(&nr) || !(0..12).contains(&nc) {
        nr = r as i32;
        nc = c as i32;
    }
    if nr == 3 && nc > 0 && nc < 11 {
        return ((3, 0), -100.0, false);
    }
    ((nr as usize, nc as usize), -1.0, nr == 3 && nc == 11)
}

pub const LAKE: [&str; 4] = ["SFFF", "FHFH", "FFFH", "HFFG"];

/// Deterministic FrozenLake: actions left/down/right/up.
pub fn lake_oracle(r: usize, c: usize, a: usize) -> ((usize, usize), f64, bool) {
    let (mut nr, mut nc) = (r as i32, c as i32);
    match a {
        0 => nc -= 1,
        1 => nr += 1,
        2 => nc += 1,
        _ => nr -= 1,
    }
    if !(0..4).contains(&nr) || !(0..4).contains(&nc) {
        nr = r as i32;
        nc = c as i32;
    }
    let tile = LAKE[nr as usize].as_bytes()[nc as usize];
    (
        (nr as usize, nc as usize),
        if tile == b'G' { 1.0 } else { 0.0 },
        tile == b'G' || tile == b'H',
    )
}

// ---- networks ----

/// Plain-loop forward pass with `f64::tanh`, sharing nothing with the
/// library's batched implementation.
pub fn naive_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    let n = net.layers().len();
    for (l, layer) in net.layers().iter().enumerate() {
        let (out, inp) = layer.weights.dim();
        let mut z = vec![0.0; out];
        for o in 0..out {
            let mut s = layer.bias[o];
            for i in 0..inp {
                s += layer.weights[[o, i]] * a[i];
            }
            z[o] = if l + 1 < n { s.tanh() } else { s };
        }
        a = z;
    }
    a
}

fn weighted_output(net: &Mlp, x: &Array2<f64>, w: &Array2<f64>) -> f64 {
    let mut total = 0.0;
    for r in 0..x.nrows() {
        let out = naive_forward(net, x.row(r).as_slice().unwrap());
        for (o, v) in out.iter().enumerate() {
            total += v * w[[r, o]];
        }
    }
    total
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-7 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Central differences (h = 1e-5) of a random weighted output against
/// backprop over `nets` random networks, covering weights, biases and inputs.
/// Returns the worst relative error and the number of checked partials.
pub fn worst_gradient_error(nets: usize, seed: u64) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for _ in 0..nets {
        let depth = rng.random_range(1..=3);
        let mut sizes = vec![rng.random_range(1..=6)];
        for _ in 0..depth {
            sizes.push(rng.random_range(1..=12));
        }
        sizes.push(rng.random_range(1..=4));
        let mut net = Mlp::new(&sizes, &mut rng).unwrap();
        let batch = rng.random_range(1..=5);
        let x = Array2::from_shape_fn((batch, sizes[0]), |_| rng.random_range(-2.0..2.0));
        let w = Array2::from_shape_fn((batch, *sizes.last().unwrap()), |_| {
            rng.random_range(-1.0..1.0)
        });
        let cache = net.forward_batch(x.view()).unwrap();
        let grads = net.backward(&cache, w.view()).unwrap();

        for l in 0..net.layers().len() {
            let (rows, cols) = net.layers()[l].weights.dim();
            for r in 0..rows {
                for c in 0..cols {
                    let orig = net.layers()[l].weights[[r, c]];
                    net.layers_mut()[l].weights[[r, c]] = orig + h;
                    let up = weighted_output(&net, &x, &w);
                    net.layers_mut()[l].weights[[r, c]] = orig - h;
                    let down = weighted_output(&net, &x, &w);
                    net.layers_mut()[l].weights[[r, c]] = orig;
                    worst = worst.max(rel_err(
                        grads.layers[l].weights[[r, c]],
                        (up - down) / (2.0 * h),
                    ));
                    checked += 1;
                }
                let orig = net.layers()[l].bias[r];
                net.layers_mut()[l].bias[r] = orig + h;
                let up = weighted_output(&net, &x, &w);
                net.layers_mut()[l].bias[r] = orig - h;
                let down = weighted_output(&net, &x, &w);
                net.layers_mut()[l].bias[r] = orig;
                worst = worst.max(rel_err(grads.layers[l].bias[r], (up - down) / (2.0 * h)));
                checked += 1;
            }
        }
        // Input gradient too.
        let mut xp = x.clone();
        for r in 0..batch {
            for c in 0..sizes[0] {
                let orig = xp[[r, c]];
                xp[[r, c]] = orig + h;
                let up = weighted_output(&net, &xp, &w);
                xp[[r, c]] = orig - h;
                let down = weighted_output(&net, &xp, &w);
                xp[[r, c]] = orig;
                worst = worst.max(rel_err(grads.input[[r, c]], (up - down) / (2.0 * h)));
            }
        }
    }
    (worst, checked)
}

// ---- chain MDP ----

/// Five states; action 1 steps right, action 0 steps left (clamped at 0).
/// Stepping right from state 4 pays 1 and ends the episode.
pub fn chain_step(s: usize, a: usize) -> (usize, f64, bool) {
    if a == 1 {
        if s == 4 {
            (4, 1.0, true)
        } else {
            (s + 1, 0.0, false)
        }
    } else {
        (if s == 0 { 0 } else { s - 1 }, 0.0, false)
    }
}

/// Q* of the chain by value iteration until the update is below 1e-15.
pub fn chain_q_star(gamma: f64) -> Vec<[f64; 2]> {
    let mut q = vec![[0.0f64; 2]; 5];
    loop {
        let mut next = q.clone();
        let mut delta: f64 = 0.0;
        for s in 0..5 {
            for a in 0..2 {
                let (s2, r, done) = chain_step(s, a);
                let v = if done { 0.0 } else { q[s2][0].max(q[s2][1]) };
                next[s][a] = r + gamma * v;
                delta = delta.max((next[s][a] - q[s][a]).abs());
            }
        }
        q = next;
        if delta < 1e-15 {
            return q;
        }
    }
}

// ---- numerics ----

/// Composite Simpson on [a, b] with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// First episode (1-based) at which the trailing `window`-episode mean reaches
/// `threshold`; only full windows count.
pub fn episodes_to_threshold(rewards: &[f64], window: usize, threshold: f64) -> Option<usize> {
    (window..=rewards.len()).find(|&end| {
        let m: f64 = rewards[end - window..end].iter().sum::<f64>() / window as f64;
        m >= threshold
    })
}

// ---- mock chat endpoint ----

/// Minimal HTTP/1.1 server answering `POST /v1/chat/completions` with canned
/// completions in order (cycling). `fail_first` requests get a 500 first.
pub struct MockChatServer {
    pub url: String,
    pub bodies: Arc<Mutex<Vec<String>>>,
    pub paths: Arc<Mutex<Vec<String>>>,
    pub auth: Arc<Mutex<Vec<Option<String>>>>,
    _handle: JoinHandle<()>,
}

fn read_request(stream: &mut TcpStream) -> Option<(String, Option<String>, String)> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let path = line.split_whitespace().nth(1)?.to_string();
    let mut len = 0usize;
    let mut auth = None;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).ok()?;
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        let (k, v) = h.split_once(':')?;
        match k.trim().to_ascii_lowercase().as_str() {
            "content-length" => len = v.trim().parse().ok()?,
            "authorization" => auth = Some(v.trim().to_string()),
            _ => {}
        }
    }
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body).ok()?;
    Some((path, auth, String::from_utf8_lossy(&body).into_owned()))
}

impl MockChatServer {
    pub fn start(replies: Vec<String>, fail_first: usize) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
        let url = format!("http://{}", listener.local_addr().unwrap());
        let bodies = Arc::new(Mutex::new(Vec::new()));
        let paths = Arc::new(Mutex::new(Vec::new()));
        let auth = Arc::new(Mutex::new(Vec::new()));
        let (b, p, a) = (bodies.clone(), paths.clone(), auth.clone());
        let handle = std::thread::spawn(move || {
            let mut served = 0usize;
            let mut next_reply = 0usize;
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let Some((path, key, body)) = read_request(&mut stream) else {
                    continue;
                };
                b.lock().unwrap().push(body);
                p.lock().unwrap().push(path);
                a.lock().unwrap().push(key);
                let (status, payload) = if served < fail_first {
                    (
                        "500 Internal Server Error",
                        "{\"error\":\"busy\"}".to_string(),
                    )
                } else {
                    let text = &replies[next_reply % replies.len()];
                    next_reply += 1;
                    let v = serde_json::json!({
                        "id": "cmpl-mock",
                        "object": "chat.completion",
                        "choices": [{"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}]
                    });
                    ("200 OK", v.to_string())
                };
                served += 1;
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                    payload.len()
                );
                let _ = stream.flush();
            }
        });
        MockChatServer {
            url,
            bodies,
            paths,
            auth,
            _handle: handle,
        }
    }

    pub fn requests(&self) -> Vec<serde_json::Value> {
        self.bodies
            .lock()
            .unwrap()
            .iter()
            .map(|b| serde_json::from_str(b).expect("request body is JSON"))
            .collect()
    }
}
