//! Outcome-to-error decoding of the sampler circuits.

use crate::circuit::HermitianAxis;
use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliOperator};

/// Single-qubit Bell measurement `(X_a X_j, Z_a Z_j)` to the error on `j`.
pub fn decode_bell(xx: i8, zz: i8) -> Letter {
    match (xx, zz) {
        (1, 1) => Letter::I,
        (1, -1) => Letter::X,
        (-1, 1) => Letter::Z,
        _ => Letter::Y,
    }
}

/// Two-qubit Bell measurements `(X_{a1}X_{j1}, Z_{a1}Z_{j1}, X_{a2}X_{j2}, Z_{a2}Z_{j2})`
/// to the error on `(j1, j2)`.
pub fn decode_bell_pair(outcomes: [i8; 4]) -> PauliOperator {
    PauliOperator::from_letters(&[decode_bell(outcomes[0], outcomes[1]), decode_bell(outcomes[2], outcomes[3])])
}

/// Preparation or measurement sampler: outcome `-1` of measuring `κ` reports
/// a Pauli that anticommutes with `κ`.
pub fn decode_axis(axis: &HermitianAxis, outcome: i8) -> Result<Letter> {
    match outcome {
        1 => Ok(Letter::I),
        -1 => Ok(axis.anticommuting_error()),
        other => Err(Error::Domain(format!("measurement outcome {other} is not ±1"))),
    }
}
