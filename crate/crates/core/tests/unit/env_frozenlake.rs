use loro_core::env::frozenlake::*;
use loro_core::env::GridCell;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn deterministic_examples() {
    assert_eq!(transition(START, RIGHT), (GridCell::new(0, 1), 0.0, false));
    assert_eq!(transition(GridCell::new(3, 2), RIGHT), (GOAL, 1.0, true));
    assert_eq!(transition(START, LEFT), (START, 0.0, false));
    assert_eq!(
        transition(GridCell::new(0, 1), DOWN),
        (GridCell::new(1, 1), 0.0, true)
    );
}

#[test]
fn slip_frequencies() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts = [0usize; 4];
    let n = 30_000;
    for _ in 0..n {
        counts[slip(RIGHT, &mut rng)] += 1;
    }
    assert_eq!(counts[LEFT], 0);
    for dir in [RIGHT, DOWN, UP] {
        let f = counts[dir] as f64 / n as f64;
        assert!((f - 1.0 / 3.0).abs() < 0.02, "dir {dir}: {f}");
    }
}
