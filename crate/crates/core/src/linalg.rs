//! Small dense complex matrices on few qubits.
//!
//! Basis index bit `q` holds the value of (local) qubit `q`, so qubit 0 is the
//! least significant bit and an operator on qubits `(0, 1)` is `A1 ⊗ A0`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::pauli::{Letter, PauliOperator};

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn letter_matrix(letter: Letter) -> CMatrix {
    match letter {
        Letter::I => identity(2),
        Letter::X => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        Letter::Y => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        Letter::Z => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    }
}

/// Dense matrix of a Pauli string (qubit 0 least significant).
pub fn pauli_matrix(p: &PauliOperator) -> CMatrix {
    let mut m = identity(1);
    for q in 0..p.qubit_count() {
        m = letter_matrix(p.letter(q)).kronecker(&m);
    }
    m
}

/// Tensor product of per-qubit matrices, element `k` acting on qubit `k`.
pub fn tensor(factors: &[CMatrix]) -> CMatrix {
    factors.iter().fold(identity(1), |acc, f| f.kronecker(&acc))
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// Max-norm distance.
pub fn distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max-norm distance after removing the best global phase.
pub fn distance_up_to_phase(a: &CMatrix, b: &CMatrix) -> f64 {
    let overlap: Complex64 = b.iter().zip(a.iter()).map(|(x, y)| x.conj() * y).sum();
    if overlap.norm() < 1e-300 {
        return distance(a, b);
    }
    let phase = overlap / overlap.norm();
    distance(a, &(b * phase))
}

/// The Pauli string proportional to `m`, if any.
pub fn pauli_of_matrix(m: &CMatrix, tolerance: f64) -> Option<PauliOperator> {
    let dim = m.nrows();
    let n = dim.trailing_zeros() as usize;
    PauliOperator::all(n).find(|p| distance_up_to_phase(m, &pauli_matrix(p)) < tolerance)
}

/// `U P U†` as a phase-free Pauli, when `U` is Clifford on `p`.
pub fn conjugate_pauli(u: &CMatrix, p: &PauliOperator) -> Option<PauliOperator> {
    let image = u * pauli_matrix(p) * dagger(u);
    pauli_of_matrix(&image, 1e-9)
}

/// Embeds an operator on `positions` (of an `n`-qubit register) into the full register.
pub fn embed(op: &CMatrix, positions: &[usize], n: usize) -> CMatrix {
    let dim = 1usize << n;
    let local = positions.len();
    let mut out = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let lc = gather(col, positions);
        let rest = col & !scatter_mask(positions);
        for lr in 0..1usize << local {
            let v = op[(lr, lc)];
            if v != ZERO {
                out[(rest | scatter(lr, positions), col)] = v;
            }
        }
    }
    out
}

/// Collects the bits of `index` at `positions` into a local index.
pub fn gather(index: usize, positions: &[usize]) -> usize {
    positions.iter().enumerate().fold(0, |acc, (k, &q)| acc | (((index >> q) & 1) << k))
}

/// Spreads the bits of a local index onto `positions`.
pub fn scatter(local: usize, positions: &[usize]) -> usize {
    positions.iter().enumerate().fold(0, |acc, (k, &q)| acc | (((local >> k) & 1) << q))
}

pub fn scatter_mask(positions: &[usize]) -> usize {
    positions.iter().fold(0, |acc, &q| acc | (1 << q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_matrices_follow_bit_order() {
        let xz: PauliOperator = "XZ".parse().unwrap();
        let m = pauli_matrix(&xz);
        let expected = letter_matrix(Letter::Z).kronecker(&letter_matrix(Letter::X));
        assert!(distance(&m, &expected) < 1e-15);
        assert_eq!(pauli_of_matrix(&(m * I), 1e-12), Some(xz));
    }

    #[test]
    fn conjugation_by_hadamard() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
        assert_eq!(conjugate_pauli(&h, &"Z".parse().unwrap()), Some("X".parse().unwrap()));
        assert_eq!(conjugate_pauli(&h, &"Y".parse().unwrap()), Some("Y".parse().unwrap()));
    }

    #[test]
    fn embedding_matches_kronecker() {
        let x = letter_matrix(Letter::X);
        let e = embed(&x, &[1], 2);
        assert!(distance(&e, &x.kronecker(&identity(2))) < 1e-15);
        assert_eq!(scatter(gather(0b1010, &[1, 3]), &[1, 3]), 0b1010);
    }
}
