//! Turning a completion into an action.

use thiserror::Error;

use crate::env::pendulum::MAX_TORQUE;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("no integer in the completion")]
    NoNumber,
    #[error("last number {0} is not a valid action")]
    OutOfRange(i64),
    #[error("no <number> in the completion")]
    NoBracketNumber,
}

/// Numeric literals in `text`: (value, is_integer). A literal is an optional
/// minus sign, digits, and an optional fractional part.
fn numbers(text: &str) -> Vec<(f64, bool, &str)> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        if !b[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let mut start = i;
        if start > 0 && b[start - 1] == b'-' {
            start -= 1;
        }
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        let mut integer = true;
        if i + 1 < b.len() && b[i] == b'.' && b[i + 1].is_ascii_digit() {
            integer = false;
            i += 1;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
        }
        let lit = &text[start..i];
        if let Ok(v) = lit.parse::<f64>() {
            out.push((v, integer, lit));
        }
    }
    out
}

/// The last integer literal in `text` (decimals are skipped), accepted only if
/// it is one of `valid` (1-based action numbers).
pub fn extract_discrete_action(text: &str, valid: &[i64]) -> Result<i64, ExtractError> {
    let last = numbers(text)
        .into_iter()
        .rev()
        .find(|(_, integer, _)| *integer)
        .ok_or(ExtractError::NoNumber)?;
    // Huge digit runs do not fit an i64 and are certainly not an action.
    let value = last.2.parse::<i64>().unwrap_or(i64::MAX);
    if valid.contains(&value) {
        Ok(value)
    } else {
        Err(ExtractError::OutOfRange(value))
    }
}

/// The last `<number>` in `text`, clamped to the torque bound.
pub fn extract_torque(text: &str) -> Result<f64, ExtractError> {
    let mut found = None;
    let mut rest = text;
    let mut offset = 0;
    while let Some(open) = rest.find('<') {
        let after = &rest[open + 1..];
        match after.find('>') {
            Some(close) => {
                let inner = after[..close].trim();
                if let Ok(v) = inner.parse::<f64>() {
                    if v.is_finite() {
                        found = Some(v);
                    }
                }
                let consumed = open + 1;
                offset += consumed;
                rest = &text[offset..];
            }
            None => break,
        }
    }
    found
        .map(|v| v.clamp(-MAX_TORQUE, MAX_TORQUE))
        .ok_or(ExtractError::NoBracketNumber)
}
