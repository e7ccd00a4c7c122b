//! Sampler circuits of the practical error sampler.
//!
//! Every support qubit `j` of a kind gets a wire: a Bell pair `(a, j)` for gate
//! qubits and spectators, or a single logical qubit for the prepared or
//! measured qubit. The circuit is decode noise, the ideal `conj(U)` on the
//! ancillas, the noisy operation, encode noise, then ideal Bell or `κ`
//! measurements. Its outcome distribution is computed exactly once per kind
//! and decoded to a distribution over Paulis on the support.

use crate::circuit::{Gate, HermitianAxis, Operation, Role};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::noise::model::KindNoise;
use crate::noise::process::positions_in;
use crate::noise::{NoiseStep, PauliChannel};
use crate::pauli::{Letter, PauliOperator};
use crate::sampler::decode::{decode_axis, decode_bell};
use crate::sim::state::{DensityState, PROBABILITY_FLOOR};

/// Largest noisy support a sampler circuit can benchmark (two simulated qubits per support qubit).
pub const MAX_SAMPLER_SUPPORT: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Wire {
    Bell,
    Prepared(HermitianAxis),
    Measured(HermitianAxis),
}

/// Exact effective error distribution reported by the practical sampler for one kind.
pub fn practical_channel(op: &Operation, noise: &KindNoise) -> Result<PauliChannel> {
    let support = &noise.support;
    let s = support.len();
    if s == 0 || s > MAX_SAMPLER_SUPPORT {
        return Err(Error::Config(format!(
            "practical sampler supports noisy supports of 1 to {MAX_SAMPLER_SUPPORT} qubits, kind {} has {s}",
            op.key()
        )));
    }
    let mut wires = vec![Wire::Bell; s];
    for comp in op.components() {
        let local = positions_in(comp.qubits(), support)?;
        match comp.gate() {
            Gate::Prepare(a) => wires[local[0]] = Wire::Prepared(*a),
            Gate::Measure(a) => wires[local[0]] = Wire::Measured(*a),
            _ => {}
        }
    }
    let mut state = DensityState::new(2 * s)?;
    open_wires(&mut state, &wires);

    let not_prepared: Vec<usize> = (0..s).filter(|&i| !matches!(wires[i], Wire::Prepared(_))).collect();
    if let Some(de) = &noise.decode {
        apply_local(&mut state, &de.marginal(&not_prepared)?, &not_prepared)?;
    }
    match op.role() {
        Role::Gate => {
            let u = op.unitary().ok_or_else(|| Error::Config(format!("kind {} has no unitary", op.key())))?;
            let local = positions_in(op.qubits(), support)?;
            let ancillas: Vec<usize> = local.iter().map(|i| i + s).collect();
            state.apply_matrix(&u.map(|z| z.conj()), &ancillas)?;
            state.apply_matrix(&u, &local)?;
        }
        Role::Prepare => {
            for comp in op.components() {
                let local = positions_in(comp.qubits(), support)?;
                state.prepare(local[0], &comp.axis().expect("preparation axis"));
            }
        }
        Role::Measure => {}
    }
    for step in noise.native.steps() {
        match step {
            NoiseStep::Pauli(c) => {
                let local = positions_in(c.support(), support)?;
                state.apply_pauli_channel(&c.clone().with_support(local)?)?;
            }
            NoiseStep::Unitary { support: qs, matrix } => state.apply_matrix(matrix, &positions_in(qs, support)?)?,
        }
    }
    let not_measured: Vec<usize> = (0..s).filter(|&i| !matches!(wires[i], Wire::Measured(_))).collect();
    if let Some(en) = &noise.encode {
        apply_local(&mut state, &en.marginal(&not_measured)?, &not_measured)?;
    }
    read_out(state, &wires, support)
}

/// Error distribution of the encode/decode-only circuit on a kind's support, if any.
pub fn encode_decode_channel(noise: &KindNoise) -> Result<Option<PauliChannel>> {
    if noise.encode.is_none() && noise.decode.is_none() {
        return Ok(None);
    }
    let s = noise.support.len();
    if s > MAX_SAMPLER_SUPPORT {
        return Err(Error::Config(format!("encode/decode sampling on {s} qubits is not supported")));
    }
    let wires = vec![Wire::Bell; s];
    let all: Vec<usize> = (0..s).collect();
    let mut state = DensityState::new(2 * s)?;
    open_wires(&mut state, &wires);
    for c in [&noise.decode, &noise.encode].into_iter().flatten() {
        apply_local(&mut state, c, &all)?;
    }
    Ok(Some(read_out(state, &wires, &noise.support)?))
}

fn open_wires(state: &mut DensityState, wires: &[Wire]) {
    let s = wires.len();
    let h = hadamard();
    for (i, w) in wires.iter().enumerate() {
        match w {
            Wire::Bell => {
                state.apply_one(i + s, &h);
                state.apply_matrix(&cnot(), &[i + s, i]).expect("distinct qubits");
            }
            Wire::Measured(a) => state.prepare(i, a),
            Wire::Prepared(_) => {}
        }
    }
}

fn apply_local(state: &mut DensityState, channel: &PauliChannel, local: &[usize]) -> Result<()> {
    if channel.error_rate() == 0.0 {
        return Ok(());
    }
    state.apply_pauli_channel(&channel.clone().with_support(local.to_vec())?)
}

/// Bell or `κ` measurements on every wire, decoded to a channel on `support`.
fn read_out(mut state: DensityState, wires: &[Wire], support: &[usize]) -> Result<PauliChannel> {
    let s = wires.len();
    let h = hadamard();
    let z = HermitianAxis::pauli(Letter::Z);
    let mut measurements = Vec::new();
    for (i, w) in wires.iter().enumerate() {
        match w {
            Wire::Bell => {
                state.apply_matrix(&cnot(), &[i + s, i])?;
                state.apply_one(i + s, &h);
                measurements.push((i + s, z));
                measurements.push((i, z));
            }
            Wire::Prepared(a) | Wire::Measured(a) => measurements.push((i, *a)),
        }
    }
    let mut dense = vec![0.0; 1usize << (2 * s)];
    let mut outcomes = Vec::with_capacity(measurements.len());
    branch(&state, &measurements, &mut outcomes, &mut |outcomes, p| {
        let mut letters = Vec::with_capacity(s);
        let mut k = 0;
        for w in wires {
            match w {
                Wire::Bell => {
                    letters.push(decode_bell(outcomes[k], outcomes[k + 1]));
                    k += 2;
                }
                Wire::Prepared(a) | Wire::Measured(a) => {
                    letters.push(decode_axis(a, outcomes[k]).expect("outcomes are ±1"));
                    k += 1;
                }
            }
        }
        dense[PauliOperator::from_letters(&letters).index()] += p;
    });
    let total: f64 = dense.iter().sum();
    dense.iter_mut().for_each(|w| *w /= total);
    PauliChannel::from_dense(support.to_vec(), dense)
}

fn branch(state: &DensityState, measurements: &[(usize, HermitianAxis)], outcomes: &mut Vec<i8>, leaf: &mut dyn FnMut(&[i8], f64)) {
    let Some(((q, axis), rest)) = measurements.split_first() else {
        leaf(outcomes, state.trace());
        return;
    };
    for m in [1i8, -1] {
        let mut next = state.clone();
        if next.project(*q, axis, m) < PROBABILITY_FLOOR {
            continue;
        }
        outcomes.push(m);
        branch(&next, rest, outcomes, leaf);
        outcomes.pop();
    }
}

fn hadamard() -> [num_complex::Complex64; 4] {
    let r = linalg::c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [r, r, r, -r]
}

/// CNOT with the control on the first listed qubit.
fn cnot() -> CMatrix {
    Operation::cnot(0, 1).unitary().expect("CNOT unitary")
}
