use loro_core::env::{Action, EnvKind, Observation};
use loro_core::replay::*;

fn item(i: usize) -> Transition {
    Transition {
        obs: Observation::vector(vec![i as f64]),
        action: Action::Discrete(0),
        reward: i as f64,
        next_obs: Observation::vector(vec![i as f64 + 1.0]),
        terminated: false,
        truncated: false,
        source: SourceTag::Online,
        episode: 0,
        step: i,
    }
}

#[test]
fn fifo_eviction() {
    let mut buf = ReplayBuffer::new(3, 0);
    for i in 1..=4 {
        buf.push(item(i));
    }
    let rewards: Vec<f64> = buf.iter().map(|t| t.reward).collect();
    assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
}

#[test]
fn push_to_empty() {
    let mut buf = ReplayBuffer::new(ReplayBuffer::DEFAULT_CAPACITY, 0);
    buf.push(item(0));
    assert_eq!(buf.len(), 1);
    assert_eq!(buf.capacity(), 100_000);
}

#[test]
fn single_item_batch() {
    let mut buf = ReplayBuffer::new(10, 0);
    buf.push(item(7));
    let batch = buf.sample(256).unwrap();
    assert_eq!(batch.len(), 256);
    assert!(batch.iter().all(|t| t.reward == 7.0));
}

#[test]
fn empty_sample_errors() {
    let mut buf = ReplayBuffer::new(10, 0);
    assert!(matches!(buf.sample(1), Err(ReplayError::Empty)));
}

#[test]
fn seeded_sampling_is_reproducible() {
    let fill = || {
        let mut b = ReplayBuffer::new(50, 99);
        b.extend((0..20).map(item));
        b
    };
    let (mut a, mut b) = (fill(), fill());
    for _ in 0..5 {
        let ra: Vec<f64> = a.sample(32).unwrap().iter().map(|t| t.reward).collect();
        let rb: Vec<f64> = b.sample(32).unwrap().iter().map(|t| t.reward).collect();
        assert_eq!(ra, rb);
    }
}

#[test]
fn foreign_source_detected() {
    let mut buf = ReplayBuffer::new(10, 0);
    let mut t = item(0);
    t.source = SourceTag::Scripted;
    buf.push(t);
    buf.require_source(SourceTag::Online);
    assert!(matches!(
        buf.sample(1),
        Err(ReplayError::ForeignSource { .. })
    ));
}

#[test]
fn merge_semantics() {
    let mut a = Dataset::new(EnvKind::CartPole, SourceTag::Scripted);
    let mut b = Dataset::new(EnvKind::CartPole, SourceTag::OnPolicy);
    for i in 0..50 {
        a.push(item(i));
    }
    for i in 50..120 {
        b.push(item(i));
    }
    let empty = Dataset::new(EnvKind::CartPole, SourceTag::Scripted);
    assert_eq!(Dataset::merge(&a, &empty).unwrap(), a);
    let m = Dataset::merge(&a, &b).unwrap();
    assert_eq!(m.len(), 120);
    assert!(m.iter().enumerate().all(|(i, t)| t.reward == i as f64));

    let mut buf = ReplayBuffer::new(100, 0);
    buf.extend(m.iter().cloned());
    let first = buf.iter().next().unwrap().reward;
    assert_eq!(first, 20.0);

    let other = Dataset::new(EnvKind::Pendulum, SourceTag::Random);
    assert!(matches!(
        Dataset::merge(&a, &other),
        Err(ReplayError::ProvenanceMismatch(..))
    ));
}

#[test]
fn tsv_rejects_bad_lines() {
    let bad = "cartpole\t0\t0\t1,2,3,4\t1\t1\t1,2,3,4\t0\n";
    assert!(Dataset::read_tsv(bad.as_bytes(), EnvKind::CartPole, SourceTag::Llm).is_err());
    let wrong_env = "pendulum\t0\t0\t1,0,0\t0.5\t-1\t1,0,0\t0\t0\n";
    assert!(matches!(
        Dataset::read_tsv(wrong_env.as_bytes(), EnvKind::CartPole, SourceTag::Llm),
        Err(ReplayError::ProvenanceMismatch(..))
    ));
    let bad_flag = "cartpole\t0\t0\t1,2,3,4\t1\t1\t1,2,3,4\t2\t0\n";
    assert!(Dataset::read_tsv(bad_flag.as_bytes(), EnvKind::CartPole, SourceTag::Llm).is_err());
}
