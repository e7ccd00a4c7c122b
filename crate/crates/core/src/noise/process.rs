use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::noise::channel::{depolarizing_on, PauliChannel};
use crate::noise::superop::{pauli_twirl, SuperOperator};
use crate::pauli::PauliOperator;

/// One elementary noise map acting on global qubits.
#[derive(Clone, Debug)]
pub enum NoiseStep {
    Pauli(PauliChannel),
    Unitary { support: Vec<usize>, matrix: CMatrix },
}

impl NoiseStep {
    pub fn support(&self) -> &[usize] {
        match self {
            NoiseStep::Pauli(c) => c.support(),
            NoiseStep::Unitary { support, .. } => support,
        }
    }
}

/// A sequence of noise maps, applied in order.
#[derive(Clone, Debug, Default)]
pub struct NoiseProcess {
    steps: Vec<NoiseStep>,
}

impl NoiseProcess {
    pub fn new(steps: Vec<NoiseStep>) -> Self {
        let steps = steps.into_iter().filter(|s| !is_trivial(s)).collect();
        NoiseProcess { steps }
    }

    pub fn none() -> Self {
        NoiseProcess::default()
    }

    pub fn depolarizing(support: Vec<usize>, p: f64) -> Result<Self> {
        Ok(NoiseProcess::new(vec![NoiseStep::Pauli(depolarizing_on(support, p)?)]))
    }

    pub fn steps(&self) -> &[NoiseStep] {
        &self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Union of the step supports, in first-appearance order.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for s in &self.steps {
            for q in s.support() {
                if !out.contains(q) {
                    out.push(*q);
                }
            }
        }
        out
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &NoiseProcess) -> NoiseProcess {
        NoiseProcess { steps: self.steps.iter().chain(other.steps.iter()).cloned().collect() }
    }

    pub fn is_pauli(&self) -> bool {
        self.steps.iter().all(|s| matches!(s, NoiseStep::Pauli(_)))
    }

    /// Dense superoperator of the whole process on `support` (which must contain every step).
    pub fn superoperator(&self, support: &[usize]) -> Result<SuperOperator> {
        let mut total = SuperOperator::identity(support.to_vec())?;
        for step in &self.steps {
            let positions = positions_in(step.support(), support)?;
            let s = match step {
                NoiseStep::Pauli(c) => {
                    let terms = c.terms().iter().map(|(p, w)| (p.embed(&positions, support.len()), *w));
                    SuperOperator::from_channel(&PauliChannel::new(support.to_vec(), terms)?)?
                }
                NoiseStep::Unitary { matrix, .. } => {
                    SuperOperator::unitary(support.to_vec(), linalg::embed(matrix, &positions, support.len()))?
                }
            };
            total = total.then(&s)?;
        }
        Ok(total)
    }

    /// Pauli twirl of the process, written on `support`.
    pub fn twirled(&self, support: &[usize]) -> Result<PauliChannel> {
        if self.is_pauli() {
            let mut total = PauliChannel::identity(support.to_vec());
            for step in &self.steps {
                if let NoiseStep::Pauli(c) = step {
                    let positions = positions_in(c.support(), support)?;
                    let terms = c.terms().iter().map(|(p, w)| (p.embed(&positions, support.len()), *w));
                    total = total.then(&PauliChannel::new(support.to_vec(), terms)?)?;
                }
            }
            return Ok(total);
        }
        pauli_twirl(&self.superoperator(support)?)
    }
}

fn is_trivial(step: &NoiseStep) -> bool {
    match step {
        NoiseStep::Pauli(c) => c.error_rate() == 0.0,
        NoiseStep::Unitary { matrix, .. } => linalg::distance(matrix, &linalg::identity(matrix.nrows())) == 0.0,
    }
}

/// Index of each qubit of `inner` within `outer`.
pub fn positions_in(inner: &[usize], outer: &[usize]) -> Result<Vec<usize>> {
    inner
        .iter()
        .map(|q| outer.iter().position(|o| o == q))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Dimension(format!("qubits {inner:?} not within {outer:?}")))
}

/// Unitary noise step `exp(-i θ/2 · axis)` on `support`.
pub fn coherent_step(theta: f64, axis: &PauliOperator, support: Vec<usize>) -> Result<NoiseStep> {
    if axis.is_identity() {
        return Err(Error::Domain("rotation axis must be a non-identity Pauli".into()));
    }
    if axis.qubit_count() != support.len() {
        return Err(Error::Dimension("rotation axis does not match support".into()));
    }
    let matrix = crate::noise::superop::rotation_unitary(theta, axis);
    Ok(NoiseStep::Unitary { support, matrix })
}
