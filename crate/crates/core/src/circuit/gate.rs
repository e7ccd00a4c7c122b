use std::fmt;

use num_complex::Complex64;

use crate::circuit::axis::HermitianAxis;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, ONE, ZERO};
use crate::pauli::PauliOperator;

/// Clifford-hierarchy class of an operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpClass {
    Pauli,
    Stabilizer,
    NonStabilizer,
}

/// Whether an operation is a gate, a state preparation or a measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Gate,
    Prepare,
    Measure,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    /// A Pauli string on the operation's qubits.
    Pauli(PauliOperator),
    Hadamard,
    Phase,
    T,
    /// Controlled-NOT, control first.
    Cnot,
    Delay,
    /// The Hermitian unitary `(x X + y Y + z Z)/√k`, e.g. the twirling gates `T†XT`.
    Reflection(HermitianAxis),
    /// Prepares the `+1` eigenstate of the axis.
    Prepare(HermitianAxis),
    /// Measures the axis operator.
    Measure(HermitianAxis),
    /// Parallel operations on disjoint qubits, treated as one operation.
    Layer {
        name: String,
        ops: Vec<Operation>,
    },
}

/// A gate placed on specific (global) qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Operation {
    gate: Gate,
    qubits: Vec<usize>,
}

impl Operation {
    pub fn new(gate: Gate, qubits: Vec<usize>) -> Result<Self> {
        let arity = match &gate {
            Gate::Pauli(p) => p.qubit_count(),
            Gate::Cnot => 2,
            Gate::Layer { .. } => return Err(Error::Contract("use Operation::layer for layers".into())),
            _ => 1,
        };
        if qubits.len() != arity {
            return Err(Error::Dimension(format!("{} expects {arity} qubits, got {}", gate_label(&gate), qubits.len())));
        }
        if has_duplicates(&qubits) {
            return Err(Error::Dimension(format!("repeated qubit in {qubits:?}")));
        }
        Ok(Operation { gate, qubits })
    }

    /// A layer of operations on disjoint qubits sharing one role.
    pub fn layer(name: &str, ops: Vec<Operation>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::Config(format!("layer '{name}' is empty")));
        }
        if ops.iter().any(|o| matches!(o.gate, Gate::Layer { .. })) {
            return Err(Error::Config(format!("layer '{name}' contains a nested layer")));
        }
        let role = ops[0].role();
        if ops.iter().any(|o| o.role() != role) {
            return Err(Error::Config(format!("layer '{name}' mixes gates, preparations and measurements")));
        }
        let qubits: Vec<usize> = ops.iter().flat_map(|o| o.qubits.iter().copied()).collect();
        if has_duplicates(&qubits) {
            return Err(Error::Config(format!("layer '{name}' acts twice on a qubit")));
        }
        Ok(Operation { gate: Gate::Layer { name: name.to_string(), ops }, qubits })
    }

    pub fn hadamard(q: usize) -> Self {
        Operation { gate: Gate::Hadamard, qubits: vec![q] }
    }

    pub fn phase(q: usize) -> Self {
        Operation { gate: Gate::Phase, qubits: vec![q] }
    }

    pub fn t(q: usize) -> Self {
        Operation { gate: Gate::T, qubits: vec![q] }
    }

    pub fn delay(q: usize) -> Self {
        Operation { gate: Gate::Delay, qubits: vec![q] }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        assert_ne!(control, target, "CNOT needs two distinct qubits");
        Operation { gate: Gate::Cnot, qubits: vec![control, target] }
    }

    pub fn pauli(p: PauliOperator, qubits: Vec<usize>) -> Result<Self> {
        Operation::new(Gate::Pauli(p), qubits)
    }

    pub fn reflection(axis: HermitianAxis, q: usize) -> Self {
        Operation { gate: Gate::Reflection(axis), qubits: vec![q] }
    }

    pub fn prepare(axis: HermitianAxis, q: usize) -> Self {
        Operation { gate: Gate::Prepare(axis), qubits: vec![q] }
    }

    pub fn measure(axis: HermitianAxis, q: usize) -> Self {
        Operation { gate: Gate::Measure(axis), qubits: vec![q] }
    }

    pub fn gate(&self) -> &Gate {
        &self.gate
    }

    /// The qubits the ideal operation acts on.
    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    /// Primitive parts: the layer members, or the operation itself.
    pub fn components(&self) -> &[Operation] {
        match &self.gate {
            Gate::Layer { ops, .. } => ops,
            _ => std::slice::from_ref(self),
        }
    }

    pub fn class(&self) -> OpClass {
        match &self.gate {
            Gate::Pauli(_) => OpClass::Pauli,
            Gate::Hadamard | Gate::Phase | Gate::Cnot | Gate::Delay => OpClass::Stabilizer,
            Gate::T => OpClass::NonStabilizer,
            Gate::Reflection(a) => {
                if a.is_pauli() {
                    OpClass::Pauli
                } else {
                    OpClass::Stabilizer
                }
            }
            Gate::Prepare(a) | Gate::Measure(a) => {
                if a.is_pauli() {
                    OpClass::Stabilizer
                } else {
                    OpClass::NonStabilizer
                }
            }
            Gate::Layer { ops, .. } => ops.iter().map(|o| o.class()).max().unwrap_or(OpClass::Pauli),
        }
    }

    pub fn role(&self) -> Role {
        match &self.gate {
            Gate::Prepare(_) => Role::Prepare,
            Gate::Measure(_) => Role::Measure,
            Gate::Layer { ops, .. } => ops[0].role(),
            _ => Role::Gate,
        }
    }

    /// Number of ±1 outcomes the operation records.
    pub fn measurement_count(&self) -> usize {
        self.components().iter().filter(|o| matches!(o.gate, Gate::Measure(_))).count()
    }

    /// Gate label used to select noise rules, e.g. `H`, `CNOT`, `PREP_X` or a layer name.
    pub fn label(&self) -> String {
        gate_label(&self.gate)
    }

    /// Identifier of the operation: label plus qubits, or the layer name.
    pub fn key(&self) -> String {
        match &self.gate {
            Gate::Layer { name, .. } => name.clone(),
            _ => format!("{}{:?}", self.label(), self.qubits).replace(' ', ""),
        }
    }

    /// Ideal unitary on `qubits()` (local qubit `k` is `qubits()[k]`), for gates.
    pub fn unitary(&self) -> Option<CMatrix> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match &self.gate {
            Gate::Pauli(p) => Some(linalg::pauli_matrix(p)),
            Gate::Hadamard => Some(CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])),
            Gate::Phase => Some(CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, linalg::I])),
            Gate::T => Some(CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)])),
            Gate::Cnot => {
                let mut m = CMatrix::zeros(4, 4);
                for (from, to) in [(0, 0), (1, 3), (2, 2), (3, 1)] {
                    m[(to, from)] = ONE;
                }
                Some(m)
            }
            Gate::Delay => Some(linalg::identity(2)),
            Gate::Reflection(a) => Some(a.matrix()),
            Gate::Prepare(_) | Gate::Measure(_) => None,
            Gate::Layer { ops, .. } => {
                let n = self.qubits.len();
                let mut total = linalg::identity(1 << n);
                for o in ops {
                    let positions: Vec<usize> = o.qubits.iter().map(|q| self.qubits.iter().position(|x| x == q).unwrap()).collect();
                    total = linalg::embed(&o.unitary()?, &positions, n) * total;
                }
                Some(total)
            }
        }
    }

    /// Measurement or preparation axis of a primitive operation.
    pub fn axis(&self) -> Option<HermitianAxis> {
        match &self.gate {
            Gate::Prepare(a) | Gate::Measure(a) | Gate::Reflection(a) => Some(*a),
            _ => None,
        }
    }
}

fn has_duplicates(qubits: &[usize]) -> bool {
    qubits.iter().enumerate().any(|(i, q)| qubits[..i].contains(q))
}

fn gate_label(gate: &Gate) -> String {
    match gate {
        Gate::Pauli(p) => format!("PAULI_{p}"),
        Gate::Hadamard => "H".into(),
        Gate::Phase => "S".into(),
        Gate::T => "T".into(),
        Gate::Cnot => "CNOT".into(),
        Gate::Delay => "DELAY".into(),
        Gate::Reflection(_) => "V".into(),
        Gate::Prepare(a) => format!("PREP_{a}"),
        Gate::Measure(a) => format!("MEAS_{a}"),
        Gate::Layer { name, .. } => name.clone(),
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.gate {
            Gate::Layer { name, ops } => {
                write!(f, "{name}{{")?;
                for (i, o) in ops.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{o}")?;
                }
                f.write_str("}")
            }
            _ => f.write_str(&self.key()),
        }
    }
}
