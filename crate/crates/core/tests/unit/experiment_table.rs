use loro_core::env::EnvKind;
use loro_core::experiment::table::*;
use loro_core::runner::{Phase, Variant};

fn rec(seed: u64, variant: Variant) -> RunRecord {
    RunRecord {
        env: EnvKind::CliffWalking,
        variant,
        seed,
        episode_rewards: vec![-13.0, -0.1 + 0.2, 1e-300, -113.0],
        episode_lengths: vec![13, 1, 0, 200],
        phases: vec![Phase::Collect, Phase::Online, Phase::Online, Phase::Online],
    }
}

#[test]
fn round_trip() {
    let runs = vec![
        rec(0, Variant::Loro),
        rec(1, Variant::Loro),
        rec(0, Variant::Mix),
    ];
    let bytes = write_table(Vec::new(), &runs).unwrap();
    let text = String::from_utf8(bytes.clone()).unwrap();
    assert!(
        text.starts_with("seed,variant,env,episode,episode_reward,cumulative_env_steps,phase\n")
    );
    assert_eq!(read_table(&bytes[..]).unwrap(), runs);
}

#[test]
fn rejects_wrong_header() {
    assert!(read_table("a,b\n1,2\n".as_bytes()).is_err());
}

#[test]
fn rejects_gaps() {
    let text = "seed,variant,env,episode,episode_reward,cumulative_env_steps,phase\n0,LORO,cliffwalking,2,-1,1,online\n";
    assert!(read_table(text.as_bytes()).is_err());
}
