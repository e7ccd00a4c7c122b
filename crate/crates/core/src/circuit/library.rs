//! Built-in circuits of the two mitigation studies.

use crate::circuit::{Circuit, HermitianAxis, Observable, ObservableTerm, Operation, OutcomeRef};
use crate::error::Result;
use crate::pauli::{Letter, PauliOperator};

/// `[e^{-iπ/8(X₁+X₂)} e^{-iπ/8 Z₁Z₂}]^steps` on `|+⟩|+⟩` in CNOT/H/T gates, measuring `X₁`.
///
/// `e^{-iπ/8 ZZ}` is `CNOT·T₂·CNOT` and `e^{-iπ/8 X}` is `H·T·H`, each up to a global phase.
pub fn trotter_circuit(steps: usize) -> Result<Circuit> {
    let x = HermitianAxis::pauli(Letter::X);
    let mut c = Circuit::new(2);
    c.push(Operation::prepare(x, 0))?;
    c.push(Operation::prepare(x, 1))?;
    for _ in 0..steps {
        c.push(Operation::cnot(0, 1))?;
        c.push(Operation::t(1))?;
        c.push(Operation::cnot(0, 1))?;
        for q in 0..2 {
            c.push(Operation::hadamard(q))?;
            c.push(Operation::t(q))?;
            c.push(Operation::hadamard(q))?;
        }
    }
    c.measure_pauli_sum(&[(1.0, "XI".parse::<PauliOperator>()?)])?;
    Ok(c)
}

/// The ten-layer four-qubit circuit of the spatial-correlation study, measuring `X⊗X⊗X⊗X`
/// (ideal value `1/(2√2)`).
///
/// Layers: `|+⟩⊗4`, `CNOT₀₁ CNOT₂₃`, `T⊗4`, `H⊗4`, `CNOT₁₂`, `S⊗4`, `T⊗4`,
/// `H⊗4`, `CNOT₀₁ CNOT₂₃`, and an `X` measurement of every qubit.
pub fn spatial_circuit() -> Result<Circuit> {
    let x = HermitianAxis::pauli(Letter::X);
    let all = |f: fn(usize) -> Operation| (0..4).map(f).collect::<Vec<_>>();
    let mut c = Circuit::new(4);
    c.push(Operation::layer("SP", (0..4).map(|q| Operation::prepare(x, q)).collect())?)?;
    c.push(Operation::layer("CX1", vec![Operation::cnot(0, 1), Operation::cnot(2, 3)])?)?;
    c.push(Operation::layer("T1", all(Operation::t))?)?;
    c.push(Operation::layer("H1", all(Operation::hadamard))?)?;
    c.push(Operation::layer("CX2", vec![Operation::cnot(1, 2)])?)?;
    c.push(Operation::layer("S1", all(Operation::phase))?)?;
    c.push(Operation::layer("T2", all(Operation::t))?)?;
    c.push(Operation::layer("H3", all(Operation::hadamard))?)?;
    c.push(Operation::layer("CX3", vec![Operation::cnot(0, 1), Operation::cnot(2, 3)])?)?;
    let slot = c.push(Operation::layer("M", (0..4).map(|q| Operation::measure(x, q)).collect())?)?;
    c.set_observable(Observable {
        terms: vec![ObservableTerm { lambda: None, coefficient: 1.0, factors: (0..4).map(|bit| OutcomeRef { slot, bit }).collect() }],
    })?;
    Ok(c)
}
