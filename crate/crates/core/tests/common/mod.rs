//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use num_complex::Complex64;
use sni::circuit::{HermitianAxis, Operation};
use sni::linalg::{self, CMatrix};
use sni::noise::model::KindNoise;
use sni::noise::{pauli_twirl, PauliChannel, SuperOperator};

pub fn superop_on(channel: &Option<PauliChannel>, support: &[usize]) -> SuperOperator {
    match channel {
        Some(c) => {
            let positions: Vec<usize> = c.support().iter().map(|q| support.iter().position(|s| s == q).unwrap()).collect();
            let terms = c.terms().iter().map(|(p, w)| (p.embed(&positions, support.len()), *w));
            SuperOperator::from_channel(&PauliChannel::new(support.to_vec(), terms).unwrap()).unwrap()
        }
        None => SuperOperator::identity(support.to_vec()).unwrap(),
    }
}

/// `twirl(N_en · N · U N_de U†)` on the kind's support.
pub fn gate_oracle(op: &Operation, noise: &KindNoise) -> PauliChannel {
    let s = &noise.support;
    let positions: Vec<usize> = op.qubits().iter().map(|q| s.iter().position(|x| x == q).unwrap()).collect();
    let u = linalg::embed(&op.unitary().unwrap(), &positions, s.len());
    let total = SuperOperator::unitary(s.clone(), linalg::dagger(&u))
        .unwrap()
        .then(&superop_on(&noise.decode, s))
        .unwrap()
        .then(&SuperOperator::unitary(s.clone(), u).unwrap())
        .unwrap()
        .then(&noise.native.superoperator(s).unwrap())
        .unwrap()
        .then(&superop_on(&noise.encode, s))
        .unwrap();
    pauli_twirl(&total).unwrap()
}

/// Flip probability of `κ` on its `+1` eigenstate after a single-qubit map.
pub fn flip_probability(axis: &HermitianAxis, map: &SuperOperator) -> f64 {
    let psi = axis.eigenstate();
    let rho = CMatrix::from_fn(2, 2, |r, c| psi[r] * psi[c].conj());
    let out = map.apply(&rho);
    let k = axis.matrix();
    let expect: Complex64 = (&k * out).trace();
    (1.0 - expect.re) / 2.0
}
