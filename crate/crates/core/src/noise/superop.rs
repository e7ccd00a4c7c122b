//! Dense superoperators in the column-stacking convention.
//!
//! `vec(ρ)` stacks the columns of `ρ`, so `ρ[i][j]` sits at index `i + d j`
//! and `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`. A unitary channel `ρ ↦ U ρ U†` is
//! therefore `conj(U) ⊗ U`. The Pauli-transfer diagonal is
//! `f_σ = vec(σ)† S vec(σ) / d`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::noise::channel::PauliChannel;
use crate::noise::signed::weights_from_fidelities;
use crate::pauli::PauliOperator;

/// Largest supported superoperator support.
pub const MAX_SUPEROPERATOR_QUBITS: usize = 4;

#[derive(Clone, Debug)]
pub struct SuperOperator {
    support: Vec<usize>,
    matrix: CMatrix,
    unitary: Option<CMatrix>,
}

impl SuperOperator {
    pub fn from_matrix(support: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        check_support(&support)?;
        let d2 = 1usize << (2 * support.len());
        if matrix.nrows() != d2 || matrix.ncols() != d2 {
            return Err(Error::Dimension(format!("superoperator of size {} on {} qubits", matrix.nrows(), support.len())));
        }
        Ok(SuperOperator { support, matrix, unitary: None })
    }

    pub fn identity(support: Vec<usize>) -> Result<Self> {
        check_support(&support)?;
        let d = 1usize << support.len();
        Self::unitary(support, linalg::identity(d))
    }

    /// The conjugation channel `ρ ↦ U ρ U†`.
    pub fn unitary(support: Vec<usize>, u: CMatrix) -> Result<Self> {
        check_support(&support)?;
        let d = 1usize << support.len();
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::Dimension("unitary does not match support".into()));
        }
        let matrix = u.conjugate().kronecker(&u);
        Ok(SuperOperator { support, matrix, unitary: Some(u) })
    }

    /// The superoperator `Σ_τ p_τ conj(τ) ⊗ τ` of a Pauli channel.
    pub fn from_channel(c: &PauliChannel) -> Result<Self> {
        let support = c.support().to_vec();
        check_support(&support)?;
        let d2 = 1usize << (2 * support.len());
        let mut matrix = CMatrix::zeros(d2, d2);
        for (p, w) in c.terms() {
            let m = linalg::pauli_matrix(p);
            matrix += m.conjugate().kronecker(&m) * Complex64::new(*w, 0.0);
        }
        Ok(SuperOperator { support, matrix, unitary: None })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// The unitary, when the superoperator was built as a unitary channel.
    pub fn as_unitary(&self) -> Option<&CMatrix> {
        self.unitary.as_ref()
    }

    pub fn dimension(&self) -> usize {
        1 << self.support.len()
    }

    /// `other ∘ self`: apply `self` first.
    pub fn then(&self, other: &SuperOperator) -> Result<SuperOperator> {
        if self.support != other.support {
            return Err(Error::Dimension("composing superoperators on different supports".into()));
        }
        let unitary = match (&self.unitary, &other.unitary) {
            (Some(a), Some(b)) => Some(b * a),
            _ => None,
        };
        Ok(SuperOperator { support: self.support.clone(), matrix: &other.matrix * &self.matrix, unitary })
    }

    /// Applies the map to a `d × d` operator on the support.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dimension();
        let v = CMatrix::from_iterator(d * d, 1, rho.iter().copied());
        let out = &self.matrix * v;
        CMatrix::from_iterator(d, d, out.iter().copied())
    }

    /// Checks `Tr S(ρ) = Tr ρ` through the identity-dual row.
    pub fn is_trace_preserving(&self, tolerance: f64) -> bool {
        let d = self.dimension();
        let vec_id: Vec<usize> = (0..d).map(|i| i + d * i).collect();
        (0..d * d).all(|col| {
            let row_sum: Complex64 = vec_id.iter().map(|&r| self.matrix[(r, col)]).sum();
            let expected = if vec_id.contains(&col) { 1.0 } else { 0.0 };
            (row_sum - expected).norm() <= tolerance
        })
    }

    /// Pauli-transfer diagonal `f_σ` indexed by `PauliOperator::index`.
    pub fn pauli_fidelities(&self) -> Vec<f64> {
        let q = self.support.len();
        let d = self.dimension();
        PauliOperator::all(q)
            .map(|s| {
                let m = linalg::pauli_matrix(&s);
                let v = CMatrix::from_iterator(d * d, 1, m.iter().copied());
                let image = &self.matrix * &v;
                let overlap: Complex64 = v.iter().zip(image.iter()).map(|(a, b)| a.conj() * b).sum();
                overlap.re / d as f64
            })
            .collect()
    }
}

fn check_support(support: &[usize]) -> Result<()> {
    if support.is_empty() || support.len() > MAX_SUPEROPERATOR_QUBITS {
        return Err(Error::Dimension(format!("superoperators support 1 to {MAX_SUPEROPERATOR_QUBITS} qubits, got {}", support.len())));
    }
    Ok(())
}

/// Conjugation channel of `exp(-i θ/2 · axis)`.
pub fn coherent_rotation(theta: f64, axis: &PauliOperator, support: Vec<usize>) -> Result<SuperOperator> {
    if axis.is_identity() {
        return Err(Error::Domain("rotation axis must be a non-identity Pauli".into()));
    }
    if axis.qubit_count() != support.len() {
        return Err(Error::Dimension("rotation axis does not match support".into()));
    }
    SuperOperator::unitary(support, rotation_unitary(theta, axis))
}

/// `exp(-i θ/2 · axis) = cos(θ/2) I - i sin(θ/2) axis`.
pub fn rotation_unitary(theta: f64, axis: &PauliOperator) -> CMatrix {
    let d = 1usize << axis.qubit_count();
    let (s, c) = (theta / 2.0).sin_cos();
    linalg::identity(d) * Complex64::new(c, 0.0) + linalg::pauli_matrix(axis) * Complex64::new(0.0, -s)
}

/// Pauli twirl: keeps the Pauli-transfer diagonal and maps it back to error probabilities.
pub fn pauli_twirl(s: &SuperOperator) -> Result<PauliChannel> {
    if !s.is_trace_preserving(1e-10) {
        return Err(Error::Contract("twirled map is not trace preserving".into()));
    }
    let q = s.support().len();
    let mut weights = weights_from_fidelities(&s.pauli_fidelities(), q);
    for w in &mut weights {
        if *w < 0.0 {
            if *w < -1e-10 {
                return Err(Error::Contract(format!("twirl produced negative probability {w}")));
            }
            *w = 0.0;
        }
    }
    PauliChannel::from_dense(s.support().to_vec(), weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::channel::depolarizing_channel;

    #[test]
    fn coherent_z_twirl() {
        let theta = (2.0f64 * 0.003).sqrt();
        let s = coherent_rotation(theta, &"Z".parse().unwrap(), vec![0]).unwrap();
        let t = pauli_twirl(&s).unwrap();
        let expected = PauliChannel::new(
            vec![0],
            [("I".parse().unwrap(), (theta / 2.0).cos().powi(2)), ("Z".parse().unwrap(), (theta / 2.0).sin().powi(2))],
        )
        .unwrap();
        assert!(t.distance(&expected) < 1e-12);
    }

    #[test]
    fn half_turn_is_pauli() {
        let s = coherent_rotation(std::f64::consts::PI, &"Z".parse().unwrap(), vec![0]).unwrap();
        let t = pauli_twirl(&s).unwrap();
        assert!((t.probability(&"Z".parse().unwrap()) - 1.0).abs() < 1e-12);
        assert!(coherent_rotation(0.3, &"I".parse().unwrap(), vec![0]).is_err());
    }

    #[test]
    fn channel_round_trip() {
        let c = depolarizing_channel(2, 0.07).unwrap();
        let back = pauli_twirl(&SuperOperator::from_channel(&c).unwrap()).unwrap();
        assert!(back.distance(&c) < 1e-12);
        let id = pauli_twirl(&SuperOperator::identity(vec![0]).unwrap()).unwrap();
        assert_eq!(id.error_rate(), 0.0);
    }

    #[test]
    fn non_trace_preserving_is_rejected() {
        let s = SuperOperator::from_matrix(vec![0], CMatrix::identity(4, 4) * Complex64::new(0.5, 0.0)).unwrap();
        assert!(matches!(pauli_twirl(&s), Err(Error::Contract(_))));
    }

    #[test]
    fn apply_uses_column_stacking() {
        let x: PauliOperator = "X".parse().unwrap();
        let s = SuperOperator::unitary(vec![0], linalg::pauli_matrix(&x)).unwrap();
        let mut rho = CMatrix::zeros(2, 2);
        rho[(0, 1)] = Complex64::new(1.0, 0.0);
        let out = s.apply(&rho);
        assert_eq!(out[(1, 0)], Complex64::new(1.0, 0.0));
    }
}
