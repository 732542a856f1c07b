use loro_core::experiment::aggregate::*;
use loro_core::experiment::ExperimentError;

#[test]
fn hand_computed() {
    let (m, s) = mean_se(&[&[0.0, 5.0], &[2.0, 5.0]]).unwrap();
    assert_eq!(m, vec![1.0, 5.0]);
    assert!((s[0] - 1.0).abs() < 1e-15);
    assert_eq!(s[1], 0.0);
}

#[test]
fn single_seed_has_zero_se() {
    let (_, s) = mean_se(&[&[3.0, 4.0]]).unwrap();
    assert_eq!(s, vec![0.0, 0.0]);
}

#[test]
fn ragged_is_an_error() {
    assert!(matches!(
        mean_se(&[&[1.0], &[1.0, 2.0]]),
        Err(ExperimentError::Ragged { .. })
    ));
    assert!(matches!(mean_se(&[]), Err(ExperimentError::EmptyGroup)));
}

#[test]
fn smoothing_window() {
    assert_eq!(smooth(&[2.0, 4.0, 6.0, 8.0], 2), vec![2.0, 3.0, 5.0, 7.0]);
    assert_eq!(smooth(&[2.0, 4.0], 1), vec![2.0, 4.0]);
}
