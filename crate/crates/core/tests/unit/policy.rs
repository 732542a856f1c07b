use loro_core::env::{env_reset, GridCell};
use loro_core::env::{Action, EnvKind, MdpSpec};
use loro_core::policy::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;

#[test]
fn canned_reply_gives_action() {
    let spec = MdpSpec::new(EnvKind::FrozenLake);
    let chat = ScriptedChat::new(["Therefore, the action is: **2**."]);
    let mut p = LlmPolicy::new(spec.clone(), "m", Box::new(chat));
    let (_, obs) = env_reset(spec, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(p.act(&obs, &mut rng).unwrap(), Action::Discrete(1));
    assert_eq!(p.extraction_failures, 0);
    assert_eq!(p.queries, 1);
}

#[test]
fn garbage_twice_falls_back_to_random() {
    let spec = MdpSpec::new(EnvKind::CliffWalking);
    let chat = ScriptedChat::new(["no idea", "still no idea"]);
    let mut p = LlmPolicy::new(spec.clone(), "m", Box::new(chat));
    let (_, obs) = env_reset(spec.clone(), 0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let a = p.act(&obs, &mut rng).unwrap();
    assert!(spec.action_space.contains(&a));
    assert_eq!(p.extraction_failures, 1);
    assert_eq!(p.queries, 2);
}

#[test]
fn requery_recovers() {
    let spec = MdpSpec::new(EnvKind::Pendulum);
    let chat = ScriptedChat::new(["hmm", "<0.5>"]);
    let mut p = LlmPolicy::new(spec.clone(), "m", Box::new(chat));
    let (_, obs) = env_reset(spec, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(
        p.act(&obs, &mut rng).unwrap(),
        Action::Continuous(vec![0.5])
    );
    assert_eq!(p.extraction_failures, 0);
}

#[test]
fn history_threads_into_next_prompt() {
    let spec = MdpSpec::new(EnvKind::CliffWalking);
    let mut p = LlmPolicy::new(spec.clone(), "m", Box::new(ScriptedChat::new(["1"])));
    let (mut env, obs) = env_reset(spec, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let a = p.act(&obs, &mut rng).unwrap();
    let step = env.step(&a).unwrap();
    p.observe(&obs, &a, &step.next_obs, step.reward, step.terminated);
    assert_eq!(p.history().unwrap().visited()[0].cell, GridCell::new(2, 0));
    let req = build_prompt(EnvKind::CliffWalking, &step.next_obs, p.history(), "m").unwrap();
    assert!(req.system().contains("Reward -1 at locations: (2, 0)."));
    assert!(req
        .system()
        .contains("Previous location: (3, 0), previous action: 1, previous reward: -1."));
}

#[test]
fn transcript_records_each_query() {
    use std::sync::{Arc, Mutex};
    #[derive(Clone, Default)]
    struct Shared(Arc<Mutex<Vec<u8>>>);
    impl Write for Shared {
        fn write(&mut self, b: &[u8]) -> std::io::Result<usize> {
            self.0.lock().unwrap().extend_from_slice(b);
            Ok(b.len())
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }
    let buf = Shared::default();
    let spec = MdpSpec::new(EnvKind::CartPole);
    let mut p = LlmPolicy::new(
        spec.clone(),
        "m",
        Box::new(ScriptedChat::new(["x", "Action: 1"])),
    )
    .with_transcript(TranscriptLog::new(Box::new(buf.clone())));
    let (_, obs) = env_reset(spec, 0);
    p.act(&obs, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let text = String::from_utf8(buf.0.lock().unwrap().clone()).unwrap();
    assert!(text.contains("[action] extraction failed"));
    assert!(text.contains("[action] 1"));
    assert_eq!(p.transcript.as_ref().unwrap().entries, 2);
}

#[test]
fn random_actions_in_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for kind in EnvKind::ALL {
        let spec = MdpSpec::new(kind);
        for _ in 0..200 {
            assert!(spec
                .action_space
                .contains(&random_act(&spec.action_space, &mut rng)));
        }
    }
}
