use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::circuit::{HermitianAxis, PauliFrame};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::noise::{NoiseProcess, NoiseStep, PauliChannel, SuperOperator};

/// Largest register the dense simulator accepts (circuits use at most 6; sampler circuits up to 8).
pub const MAX_STATE_QUBITS: usize = 8;
/// Branch probabilities below this are treated as zero.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

/// Dense `2^n × 2^n` density matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct DensityState {
    n: usize,
    dim: usize,
    data: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl DensityState {
    /// `|0…0⟩⟨0…0|` on `n` qubits.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_STATE_QUBITS {
            return Err(Error::Scale(format!("dense simulation supports 1 to {MAX_STATE_QUBITS} qubits, got {n}")));
        }
        let dim = 1usize << n;
        let mut data = vec![ZERO; dim * dim];
        data[0] = ONE;
        Ok(DensityState { n, dim, data, scratch: vec![ZERO; dim * dim] })
    }

    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        let dim = m.nrows();
        if !dim.is_power_of_two() || m.ncols() != dim {
            return Err(Error::Dimension(format!("{}x{} is not a register density matrix", m.nrows(), m.ncols())));
        }
        let mut s = DensityState::new(dim.trailing_zeros() as usize)?;
        for r in 0..dim {
            for c in 0..dim {
                s.data[r * dim + c] = m[(r, c)];
            }
        }
        Ok(s)
    }

    /// Pure state from amplitudes.
    pub fn from_amplitudes(psi: &[Complex64]) -> Result<Self> {
        let dim = psi.len();
        if !dim.is_power_of_two() {
            return Err(Error::Dimension(format!("{dim} amplitudes")));
        }
        let mut s = DensityState::new(dim.trailing_zeros() as usize)?;
        for r in 0..dim {
            for c in 0..dim {
                s.data[r * dim + c] = psi[r] * psi[c].conj();
            }
        }
        Ok(s)
    }

    pub fn reset(&mut self) {
        self.data.iter_mut().for_each(|v| *v = ZERO);
        self.data[0] = ONE;
    }

    pub fn qubit_count(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, self.dim, |r, c| self.data[r * self.dim + c])
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    /// Largest deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.data[r * d + c] - self.data[c * d + r].conj()).norm());
            }
        }
        worst
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<()> {
        for (i, &q) in qubits.iter().enumerate() {
            if q >= self.n || qubits[..i].contains(&q) {
                return Err(Error::Dimension(format!("qubits {qubits:?} on a {}-qubit state", self.n)));
            }
        }
        Ok(())
    }

    /// `ρ ↦ M ρ M†` for a single-qubit matrix `m = [m00, m01, m10, m11]`.
    pub fn apply_one(&mut self, q: usize, m: &[Complex64; 4]) {
        let d = self.dim;
        let b = 1usize << q;
        let data = &mut self.data;
        for r0 in (0..d).filter(|r| r & b == 0) {
            let r1 = r0 | b;
            for c in 0..d {
                let a0 = data[r0 * d + c];
                let a1 = data[r1 * d + c];
                data[r0 * d + c] = m[0] * a0 + m[1] * a1;
                data[r1 * d + c] = m[2] * a0 + m[3] * a1;
            }
        }
        let mc = [m[0].conj(), m[1].conj(), m[2].conj(), m[3].conj()];
        for r in 0..d {
            let row = &mut data[r * d..(r + 1) * d];
            for c0 in (0..d).filter(|c| c & b == 0) {
                let c1 = c0 | b;
                let a0 = row[c0];
                let a1 = row[c1];
                row[c0] = a0 * mc[0] + a1 * mc[1];
                row[c1] = a0 * mc[2] + a1 * mc[3];
            }
        }
    }

    /// `ρ ↦ D ρ D†` for `D = diag(d0, d1)` on qubit `q`.
    pub fn apply_diagonal(&mut self, q: usize, diag: &[Complex64; 2]) {
        let d = self.dim;
        let b = 1usize << q;
        for r in 0..d {
            let dr = diag[(r & b != 0) as usize];
            for c in 0..d {
                let dc = diag[(c & b != 0) as usize].conj();
                self.data[r * d + c] *= dr * dc;
            }
        }
    }

    /// `ρ ↦ U ρ U†` for a `2^k × 2^k` matrix on `qubits` (local bit `i` is `qubits[i]`).
    pub fn apply_matrix(&mut self, m: &CMatrix, qubits: &[usize]) -> Result<()> {
        self.check_qubits(qubits)?;
        let k = qubits.len();
        let local = 1usize << k;
        if m.nrows() != local || m.ncols() != local {
            return Err(Error::Dimension(format!("{}x{} matrix on {k} qubits", m.nrows(), m.ncols())));
        }
        if k == 1 {
            self.apply_one(qubits[0], &[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]);
            return Ok(());
        }
        let d = self.dim;
        let mask = linalg::scatter_mask(qubits);
        let offsets: Vec<usize> = (0..local).map(|l| linalg::scatter(l, qubits)).collect();
        let mut buf = vec![ZERO; local];
        for base in (0..d).filter(|r| r & mask == 0) {
            for c in 0..d {
                for (l, off) in offsets.iter().enumerate() {
                    buf[l] = self.data[(base | off) * d + c];
                }
                for (i, off) in offsets.iter().enumerate() {
                    let mut acc = ZERO;
                    for (j, b) in buf.iter().enumerate() {
                        acc += m[(i, j)] * b;
                    }
                    self.data[(base | off) * d + c] = acc;
                }
            }
        }
        for r in 0..d {
            for base in (0..d).filter(|c| c & mask == 0) {
                for (l, off) in offsets.iter().enumerate() {
                    buf[l] = self.data[r * d + (base | off)];
                }
                for (i, off) in offsets.iter().enumerate() {
                    let mut acc = ZERO;
                    for (j, b) in buf.iter().enumerate() {
                        acc += b * m[(i, j)].conj();
                    }
                    self.data[r * d + (base | off)] = acc;
                }
            }
        }
        Ok(())
    }

    /// Conjugation by the Pauli `X^x Z^z` (phase-free).
    pub fn apply_pauli(&mut self, frame: PauliFrame) {
        if frame.is_identity() {
            return;
        }
        let d = self.dim;
        let (x, z) = (frame.x as usize, frame.z as usize);
        for r in 0..d {
            let sr = (r & z).count_ones();
            for c in 0..d {
                let sign = (sr + (c & z).count_ones()) & 1;
                let v = self.data[r * d + c];
                self.scratch[(r ^ x) * d + (c ^ x)] = if sign == 1 { -v } else { v };
            }
        }
        std::mem::swap(&mut self.data, &mut self.scratch);
    }

    /// Exact Pauli channel `ρ ↦ Σ_τ p_τ τ ρ τ`.
    pub fn apply_pauli_channel(&mut self, channel: &PauliChannel) -> Result<()> {
        self.check_qubits(channel.support())?;
        let original = self.data.clone();
        let mut total = vec![ZERO; self.data.len()];
        for (p, w) in channel.terms() {
            self.data.copy_from_slice(&original);
            self.apply_pauli(crate::circuit::PauliFrame::lift(p, channel.support()));
            for (t, v) in total.iter_mut().zip(&self.data) {
                *t += v * *w;
            }
        }
        self.data = total;
        Ok(())
    }

    /// Exact application of every step of a noise process.
    pub fn apply_process(&mut self, process: &NoiseProcess) -> Result<()> {
        for step in process.steps() {
            match step {
                NoiseStep::Pauli(c) => self.apply_pauli_channel(c)?,
                NoiseStep::Unitary { support, matrix } => self.apply_matrix(matrix, support)?,
            }
        }
        Ok(())
    }

    /// Applies a dense superoperator on its support (column-stacking convention).
    pub fn apply_superoperator(&mut self, s: &SuperOperator) -> Result<()> {
        let support = s.support().to_vec();
        self.check_qubits(&support)?;
        if let Some(u) = s.as_unitary() {
            return self.apply_matrix(&u.clone(), &support);
        }
        let k = support.len();
        let local = 1usize << k;
        let d = self.dim;
        let mask = linalg::scatter_mask(&support);
        let offsets: Vec<usize> = (0..local).map(|l| linalg::scatter(l, &support)).collect();
        let m = s.matrix();
        let mut out = vec![ZERO; d * d];
        let mut block = vec![ZERO; local * local];
        for rb in (0..d).filter(|r| r & mask == 0) {
            for cb in (0..d).filter(|c| c & mask == 0) {
                for j in 0..local {
                    for i in 0..local {
                        block[i + local * j] = self.data[(rb | offsets[i]) * d + (cb | offsets[j])];
                    }
                }
                for col in 0..local {
                    for row in 0..local {
                        let idx = row + local * col;
                        let mut acc = ZERO;
                        for (src, b) in block.iter().enumerate() {
                            acc += m[(idx, src)] * b;
                        }
                        out[(rb | offsets[row]) * d + (cb | offsets[col])] = acc;
                    }
                }
            }
        }
        self.data = out;
        Ok(())
    }

    /// `Tr(A ρ)` for the axis operator on qubit `q`.
    pub fn axis_expectation(&self, q: usize, axis: &HermitianAxis) -> f64 {
        let a = axis.matrix();
        let d = self.dim;
        let b = 1usize << q;
        let mut acc = ZERO;
        for r0 in (0..d).filter(|r| r & b == 0) {
            let r1 = r0 | b;
            acc += a[(0, 0)] * self.data[r0 * d + r0]
                + a[(0, 1)] * self.data[r1 * d + r0]
                + a[(1, 0)] * self.data[r0 * d + r1]
                + a[(1, 1)] * self.data[r1 * d + r1];
        }
        acc.re
    }

    /// Unnormalised projection onto the `outcome` eigenspace; returns its probability.
    pub fn project(&mut self, q: usize, axis: &HermitianAxis, outcome: i8) -> f64 {
        let a = axis.matrix();
        let s = Complex64::new(outcome as f64, 0.0);
        let half = Complex64::new(0.5, 0.0);
        let proj = [(ONE + s * a[(0, 0)]) * half, s * a[(0, 1)] * half, s * a[(1, 0)] * half, (ONE + s * a[(1, 1)]) * half];
        self.apply_one(q, &proj);
        self.trace()
    }

    /// Samples the Born outcome of measuring the axis on qubit `q` and collapses the state.
    pub fn measure<R: Rng + ?Sized>(&mut self, q: usize, axis: &HermitianAxis, rng: &mut R) -> i8 {
        let total = self.trace();
        let plus = ((total + self.axis_expectation(q, axis)) / 2.0 / total).clamp(0.0, 1.0);
        let outcome = if plus < PROBABILITY_FLOOR {
            -1
        } else if 1.0 - plus < PROBABILITY_FLOOR || rng.gen::<f64>() < plus {
            1
        } else {
            -1
        };
        let p = self.project(q, axis, outcome);
        self.scale(total / p);
        outcome
    }

    /// Replaces qubit `q` by the `+1` eigenstate of the axis.
    pub fn prepare(&mut self, q: usize, axis: &HermitianAxis) {
        let psi = axis.eigenstate();
        let d = self.dim;
        let b = 1usize << q;
        for r in 0..d {
            for c in 0..d {
                let (r0, c0) = (r & !b, c & !b);
                let reduced = self.data[r0 * d + c0] + self.data[(r0 | b) * d + (c0 | b)];
                let br = (r & b != 0) as usize;
                let bc = (c & b != 0) as usize;
                self.scratch[r * d + c] = reduced * psi[br] * psi[bc].conj();
            }
        }
        std::mem::swap(&mut self.data, &mut self.scratch);
    }

    /// Reduced density matrix on `keep` (local bit `i` is `keep[i]`).
    pub fn reduced(&self, keep: &[usize]) -> Result<CMatrix> {
        self.check_qubits(keep)?;
        let local = 1usize << keep.len();
        let mask = linalg::scatter_mask(keep);
        let mut out = CMatrix::zeros(local, local);
        for r in 0..self.dim {
            for c in 0..self.dim {
                if r & !mask == c & !mask {
                    out[(linalg::gather(r, keep), linalg::gather(c, keep))] += self.data[r * self.dim + c];
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for DensityState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for DensityState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DensityState({} qubits)", self.n)?;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let v = self.data[r * self.dim + c];
                write!(f, "{:+.6}{:+.6}i ", v.re, v.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
