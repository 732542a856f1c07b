use loro_core::policy::extract::*;

#[test]
fn last_integer_wins() {
    assert_eq!(extract_discrete_action("go 1 then 2", &[1, 2]), Ok(2));
    assert_eq!(extract_discrete_action("1", &[1, 2, 3, 4]), Ok(1));
    assert_eq!(
        extract_discrete_action("angle 0.2095 so action 2", &[1, 2]),
        Ok(2)
    );
    assert_eq!(
        extract_discrete_action("action 2, angle 0.2095", &[1, 2]),
        Ok(2)
    );
}

#[test]
fn errors() {
    assert_eq!(
        extract_discrete_action("I cannot decide.", &[1, 2]),
        Err(ExtractError::NoNumber)
    );
    assert_eq!(
        extract_discrete_action("Action: 7", &[1, 2]),
        Err(ExtractError::OutOfRange(7))
    );
    assert_eq!(
        extract_discrete_action("-1", &[1, 2]),
        Err(ExtractError::OutOfRange(-1))
    );
    assert_eq!(
        extract_discrete_action("99999999999999999999999", &[1]),
        Err(ExtractError::OutOfRange(i64::MAX))
    );
}

#[test]
fn torque() {
    assert_eq!(extract_torque("suggest: <1.0>"), Ok(1.0));
    assert_eq!(extract_torque("<3.7>"), Ok(2.0));
    assert_eq!(extract_torque("<-5>"), Ok(-2.0));
    assert_eq!(extract_torque("e.g., <1.5>. I pick < -0.25 >"), Ok(-0.25));
    assert_eq!(extract_torque("<1.5> then <oops>"), Ok(1.5));
    assert_eq!(
        extract_torque("torque 1.5 without brackets"),
        Err(ExtractError::NoBracketNumber)
    );
    assert_eq!(extract_torque("<nan>"), Err(ExtractError::NoBracketNumber));
}
