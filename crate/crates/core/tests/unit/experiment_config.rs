use loro_core::env::EnvKind;
use loro_core::experiment::config::*;
use loro_core::policy::CollectorKind;
use loro_core::runner::Variant;

fn flags(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[test]
fn defaults_from_flags_only() {
    let c = ExperimentConfig::from_text("", &flags(&[("env", "cartpole"), ("variant", "loro")]))
        .unwrap();
    assert_eq!(c.runs.len(), 1);
    let r = &c.runs[0];
    assert_eq!(r.tau, 10);
    assert_eq!(r.pretrain_steps, 1000);
    assert_eq!(r.episodes, 150);
    assert_eq!(r.hp.batch_size, 256);
    assert_eq!(r.hp.buffer_capacity, 100_000);
    assert_eq!(r.hp.epsilon, 0.1);
    assert_eq!(r.hp.gamma, 0.99);
    assert_eq!(r.hp.target_update_interval, 1000);
    assert_eq!(r.hp.learning_rate, 5e-5);
    assert_eq!(c.seeds, vec![0, 1, 2, 3, 4]);
}

#[test]
fn loro_needs_tau() {
    let e = ExperimentConfig::from_text(
        "",
        &flags(&[("env", "cartpole"), ("variant", "loro"), ("tau", "0")]),
    );
    assert!(matches!(e, Err(ConfigError::Invalid(_))));
}

#[test]
fn mountaincar_episodes() {
    let c = ExperimentConfig::from_text("", &flags(&[("episodes", "300"), ("env", "mountaincar")]))
        .unwrap();
    assert_eq!(c.runs[0].episodes, 300);
    assert_eq!(c.runs[0].env.kind, EnvKind::MountainCar);
}

#[test]
fn sections_and_overrides() {
    let text = "env = cliffwalking\nepisodes = 50 # short\nseeds = 0..3\n\n[run]\nvariant = loro\ntau = 5\n[run]\nvariant = on_policy,mix\n";
    let c = ExperimentConfig::from_text(text, &[]).unwrap();
    assert_eq!(c.seeds, vec![0, 1, 2]);
    assert_eq!(c.runs.len(), 3);
    assert_eq!(c.runs[0].tau, 5);
    assert_eq!(c.runs[1].variant, Variant::OnPolicy);
    assert!(c.runs.iter().all(|r| r.episodes == 50));
    let c = ExperimentConfig::from_text(text, &flags(&[("tau", "2"), ("episodes", "20")])).unwrap();
    assert!(c.runs.iter().all(|r| r.tau == 2 && r.episodes == 20));
}

#[test]
fn errors() {
    assert!(matches!(
        ExperimentConfig::from_text("colour = red", &[]),
        Err(ConfigError::UnknownKey(_))
    ));
    assert!(matches!(
        ExperimentConfig::from_text("", &[]),
        Err(ConfigError::MissingEnv)
    ));
    assert!(matches!(
        ExperimentConfig::from_text("env = cartpole\ntau = many", &[]),
        Err(ConfigError::InvalidValue { .. })
    ));
    assert!(matches!(
        ExperimentConfig::from_text("env = cartpole\n[other]", &[]),
        Err(ConfigError::Syntax { .. })
    ));
    assert!(matches!(
        ExperimentConfig::from_text("env cartpole", &[]),
        Err(ConfigError::Syntax { .. })
    ));
    assert!(ExperimentConfig::from_text("env = cartpole\n[run]\njobs = 2", &[]).is_err());
}

#[test]
fn pretrain_random_uses_random_collector() {
    let c =
        ExperimentConfig::from_text("env = cliffwalking\nvariant = pretrain_random", &[]).unwrap();
    assert_eq!(c.runs[0].collector, CollectorKind::Random);
}

#[test]
fn llm_runs_are_serialized() {
    let c =
        ExperimentConfig::from_text("env = frozenlake\ncollector = llm\njobs = 4", &[]).unwrap();
    assert_eq!(c.jobs, 1);
    let c = ExperimentConfig::from_text(
        "env = frozenlake\ncollector = llm\njobs = 4\nllm_parallel = true",
        &[],
    )
    .unwrap();
    assert_eq!(c.jobs, 4);
}
