//! Browser demo: roll out a collector, compare variants on a small learner,
//! and parse model completions into actions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use loro_core::agents::Hyperparams;
use loro_core::env::{Action, Env, EnvKind, MdpSpec};
use loro_core::experiment::{
    aggregate, flat_references, plotted, render_svg, PlotOptions, RunRecord,
};
use loro_core::policy::extract::{extract_discrete_action, extract_torque};
use loro_core::policy::{external_action, random_act, scripted_act, CollectorKind};
use loro_core::runner::{run_variant, RunConfig, Variant};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn env_kind(name: &str) -> Result<EnvKind, String> {
    name.parse()
        .map_err(|e: loro_core::env::EnvError| e.to_string())
}

#[derive(Serialize)]
struct Step {
    obs: Vec<f64>,
    /// As the model would type it: 1-based numbers or a torque.
    action: String,
    reward: f64,
}

#[derive(Serialize)]
struct Rollout {
    env: String,
    policy: String,
    steps: Vec<Step>,
    total_reward: f64,
    terminated: bool,
}

/// One episode of the scripted or random collector, as JSON.
pub fn rollout_json(env: &str, policy: &str, seed: u64) -> Result<String, String> {
    let kind = env_kind(env)?;
    let collector: CollectorKind = policy.parse()?;
    if collector == CollectorKind::Llm {
        return Err("the demo has no model endpoint; use scripted or random".into());
    }
    let spec = MdpSpec::new(kind);
    let mut env = Env::new(spec.clone(), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obs = env.reset();
    let mut steps = Vec::new();
    let terminated = loop {
        let action: Action = match collector {
            CollectorKind::Scripted => scripted_act(kind, &obs).map_err(|e| e.to_string())?,
            _ => random_act(&spec.action_space, &mut rng),
        };
        let s = env.step(&action).map_err(|e| e.to_string())?;
        steps.push(Step {
            obs: obs.values.clone(),
            action: external_action(&action),
            reward: s.reward,
        });
        obs = s.next_obs.clone();
        if s.done() {
            break s.terminated;
        }
    };
    let total_reward = steps.iter().map(|s| s.reward).sum();
    serde_json::to_string(&Rollout {
        env: kind.to_string(),
        policy: collector.name().to_string(),
        steps,
        total_reward,
        terminated,
    })
    .map_err(|e| e.to_string())
}

/// Learning curves of LORO, ON_POLICY and the collector level on a reduced
/// learner (32-unit layers, batch 32) so it finishes in a browser tab.
pub fn compare_svg(env: &str, episodes: usize, seeds: u32) -> Result<String, String> {
    let kind = env_kind(env)?;
    let hp = Hyperparams {
        hidden: vec![32, 32],
        batch_size: 32,
        learning_rate: 1e-3,
        target_update_interval: 200,
        ..Hyperparams::default()
    };
    let tau = (episodes / 5).max(1);
    let mut records = Vec::new();
    for variant in [Variant::Loro, Variant::OnPolicy, Variant::CollectorOnly] {
        for seed in 0..seeds.max(1) as u64 {
            let mut c = RunConfig::new(MdpSpec::new(kind), variant, episodes, seed);
            c.hp = hp.clone();
            c.tau = tau;
            c.pretrain_steps = 200;
            let r = run_variant(&c).map_err(|e| e.to_string())?;
            records.push(RunRecord::from_result(kind, &r));
        }
    }
    let curves = aggregate(&records, 1).map_err(|e| e.to_string())?;
    let opts = PlotOptions {
        title: Some(format!("{kind}, {episodes} episodes, tau {tau}")),
        ..PlotOptions::default()
    };
    render_svg(
        &plotted(&curves, kind),
        &flat_references(&records, kind),
        &opts,
    )
    .map_err(|e| e.to_string())
}

/// The action a completion encodes, as the model would have typed it.
pub fn parse_completion(env: &str, text: &str) -> Result<String, String> {
    let kind = env_kind(env)?;
    match MdpSpec::new(kind).n_actions() {
        Some(n) => {
            let valid: Vec<i64> = (1..=n as i64).collect();
            extract_discrete_action(text, &valid)
                .map(|a| a.to_string())
                .map_err(|e| e.to_string())
        }
        None => extract_torque(text)
            .map(|t| t.to_string())
            .map_err(|e| e.to_string()),
    }
}

#[wasm_bindgen]
pub fn rollout(env: &str, policy: &str, seed: u32) -> Result<String, JsValue> {
    rollout_json(env, policy, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn compare(env: &str, episodes: u32, seeds: u32) -> Result<String, JsValue> {
    compare_svg(env, episodes as usize, seeds).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = parseCompletion)]
pub fn parse_completion_js(env: &str, text: &str) -> Result<String, JsValue> {
    parse_completion(env, text).map_err(|e| JsValue::from_str(&e))
}
