use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::circuit::{CompiledCircuit, Expansion, Gate, HermitianAxis, OpClass, Operation, PauliFrame, Role};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::noise::model::NoiseTable;
use crate::noise::{NoiseStep, PauliChannel};
use crate::sim::state::DensityState;

/// A precompiled ideal action on the register.
#[derive(Clone, Debug)]
pub enum Kernel {
    Frame(PauliFrame),
    Diagonal { q: usize, d: [Complex64; 2] },
    One { q: usize, m: [Complex64; 4] },
    Matrix { qubits: Vec<usize>, m: CMatrix },
    Prepare { q: usize, axis: HermitianAxis },
    Measure { q: usize, axis: HermitianAxis, bit: usize },
}

impl Kernel {
    /// Applies a unitary kernel; preparation resets, measurements are handled by the caller.
    pub fn apply(&self, state: &mut DensityState) -> Result<()> {
        match self {
            Kernel::Frame(f) => state.apply_pauli(*f),
            Kernel::Diagonal { q, d } => state.apply_diagonal(*q, d),
            Kernel::One { q, m } => state.apply_one(*q, m),
            Kernel::Matrix { qubits, m } => state.apply_matrix(m, qubits)?,
            Kernel::Prepare { q, axis } => state.prepare(*q, axis),
            Kernel::Measure { .. } => return Err(Error::Contract("measurement kernels need an outcome".into())),
        }
        Ok(())
    }
}

/// Kernels of an operation's components, in order.
pub fn kernels_for(op: &Operation) -> Result<Vec<Kernel>> {
    let mut out = Vec::new();
    let mut bit = 0;
    for comp in op.components() {
        let q = comp.qubits()[0];
        match comp.gate() {
            Gate::Pauli(p) => out.push(Kernel::Frame(PauliFrame::lift(p, comp.qubits()))),
            Gate::Delay => {}
            Gate::Reflection(a) if a.is_pauli() => {
                let (letter, _) = a.as_pauli().expect("Pauli axis");
                out.push(Kernel::Frame(PauliFrame::lift(&crate::pauli::PauliOperator::single(1, 0, letter), &[q])));
            }
            Gate::Phase | Gate::T => {
                let u = comp.unitary().expect("gate");
                out.push(Kernel::Diagonal { q, d: [u[(0, 0)], u[(1, 1)]] });
            }
            Gate::Hadamard | Gate::Reflection(_) => {
                let u = comp.unitary().expect("gate");
                out.push(Kernel::One { q, m: [u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]] });
            }
            Gate::Cnot => out.push(Kernel::Matrix { qubits: comp.qubits().to_vec(), m: comp.unitary().expect("gate") }),
            Gate::Prepare(a) => out.push(Kernel::Prepare { q, axis: *a }),
            Gate::Measure(a) => {
                out.push(Kernel::Measure { q, axis: *a, bit });
                bit += 1;
            }
            Gate::Layer { .. } => return Err(Error::Contract("nested layer".into())),
        }
    }
    Ok(out)
}

/// Native noise of one kind in executable form.
#[derive(Clone, Debug)]
pub enum NoiseKernel {
    Pauli(PauliChannel),
    Unitary { qubits: Vec<usize>, m: CMatrix },
}

impl NoiseKernel {
    /// Applies one sampled realisation of the noise.
    pub fn sample_apply<R: Rng + ?Sized>(&self, state: &mut DensityState, rng: &mut R) -> Result<()> {
        match self {
            NoiseKernel::Pauli(c) => {
                if rng.gen::<f64>() < c.error_rate() {
                    if let Some(e) = c.sample_error(rng) {
                        state.apply_pauli(PauliFrame::lift(&e, c.support()));
                    }
                }
                Ok(())
            }
            NoiseKernel::Unitary { qubits, m } => state.apply_matrix(m, qubits),
        }
    }

    /// Applies the exact channel.
    pub fn apply_exact(&self, state: &mut DensityState) -> Result<()> {
        match self {
            NoiseKernel::Pauli(c) => state.apply_pauli_channel(c),
            NoiseKernel::Unitary { qubits, m } => state.apply_matrix(m, qubits),
        }
    }
}

/// A non-Pauli primitive operation inside a slot, used for per-gate corrections.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimitiveSite {
    /// Index into [`Program::primitive_types`].
    pub ty: usize,
    pub qubits: Vec<usize>,
}

/// One step of a slot's execution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Frame(PauliFrame),
    Kernel { op: u32, k: u32 },
    DecorationKernel { op: u32, gate: u32 },
    Native { kind: u32 },
    Insert { kind: u32 },
    Correct { op: u32 },
    CorrectDecoration { op: u32, gate: u32 },
}

/// A compiled circuit with kernels and noise ready for execution.
#[derive(Clone, Debug)]
pub struct Program {
    compiled: Arc<CompiledCircuit>,
    op_kernels: Vec<Vec<Kernel>>,
    decoration_kernels: Vec<Vec<Kernel>>,
    noise: Option<Arc<NoiseTable>>,
    noise_kernels: Vec<Vec<Vec<NoiseKernel>>>,
    supports: Vec<Vec<usize>>,
    primitive_types: Vec<String>,
    op_sites: Vec<Vec<PrimitiveSite>>,
    decoration_sites: Vec<Vec<PrimitiveSite>>,
}

impl Program {
    pub fn new(compiled: Arc<CompiledCircuit>, noise: Option<Arc<NoiseTable>>) -> Result<Self> {
        let n = compiled.circuit().qubit_count();
        if n > 6 {
            return Err(Error::Scale(format!("circuits are limited to 6 qubits, got {n}")));
        }
        let mut primitive_types: Vec<String> = Vec::new();
        let mut site = |op: &Operation| {
            let label = op.label();
            let ty = match primitive_types.iter().position(|t| *t == label) {
                Some(i) => i,
                None => {
                    primitive_types.push(label);
                    primitive_types.len() - 1
                }
            };
            PrimitiveSite { ty, qubits: op.qubits().to_vec() }
        };
        let mut op_kernels = Vec::new();
        let mut decoration_kernels = Vec::new();
        let mut op_sites = Vec::new();
        let mut decoration_sites = Vec::new();
        for c in compiled.ops() {
            op_kernels.push(kernels_for(&c.operation)?);
            op_sites.push(c.operation.components().iter().filter(|p| p.class() != OpClass::Pauli).map(&mut site).collect());
            let gates = c.plan.as_ref().map(|p| p.decoration_gates().to_vec()).unwrap_or_default();
            let mut ks = Vec::new();
            let mut ss = Vec::new();
            for g in &gates {
                let mut k = kernels_for(g)?;
                ks.push(k.pop().expect("one kernel per decoration"));
                ss.push(site(g));
            }
            decoration_kernels.push(ks);
            decoration_sites.push(ss);
        }
        let kind_count = compiled.kinds().len();
        let (noise_kernels, supports) = match &noise {
            Some(table) => {
                if table.kind_count() != kind_count {
                    return Err(Error::Dimension("noise table does not match the circuit kinds".into()));
                }
                let kernels = table.scenarios().iter().map(|s| s.kinds.iter().map(|k| noise_kernels(&k.native)).collect()).collect();
                let supports: Vec<Vec<usize>> = (0..kind_count).map(|k| table.support(k).to_vec()).collect();
                (kernels, supports)
            }
            None => (Vec::new(), compiled.kinds().iter().map(|k| k.operation.qubits().to_vec()).collect()),
        };
        if let Some(q) = supports.iter().flatten().find(|&&q| q >= n) {
            return Err(Error::Dimension(format!("noise acts on qubit {q} outside the register")));
        }
        Ok(Program {
            compiled,
            op_kernels,
            decoration_kernels,
            noise,
            noise_kernels,
            supports,
            primitive_types,
            op_sites,
            decoration_sites,
        })
    }

    pub fn compiled(&self) -> &CompiledCircuit {
        &self.compiled
    }

    pub fn noise(&self) -> Option<&NoiseTable> {
        self.noise.as_deref()
    }

    pub fn qubit_count(&self) -> usize {
        self.compiled.circuit().qubit_count()
    }

    pub fn kernel(&self, op: u32, k: u32) -> &Kernel {
        &self.op_kernels[op as usize][k as usize]
    }

    pub fn decoration_kernel(&self, op: u32, gate: u32) -> &Kernel {
        &self.decoration_kernels[op as usize][gate as usize]
    }

    pub fn noise_kernels(&self, scenario: usize, kind: usize) -> &[NoiseKernel] {
        &self.noise_kernels[scenario][kind]
    }

    pub fn scenario_count(&self) -> usize {
        self.noise_kernels.len()
    }

    /// Noisy support of a kind (the operation's qubits without a noise table).
    pub fn support(&self, kind: usize) -> &[usize] {
        &self.supports[kind]
    }

    pub fn primitive_types(&self) -> &[String] {
        &self.primitive_types
    }

    pub fn op_sites(&self, op: u32) -> &[PrimitiveSite] {
        &self.op_sites[op as usize]
    }

    pub fn decoration_site(&self, op: u32, gate: u32) -> &PrimitiveSite {
        &self.decoration_sites[op as usize][gate as usize]
    }

    /// Appends the actions of compiled operation `op` with the given twirl draw.
    pub fn plan_slot(&self, op: usize, expansion: Option<&Expansion>, out: &mut Vec<Action>) {
        let c = &self.compiled.ops()[op];
        let id = op as u32;
        let kernels = (0..self.op_kernels[op].len() as u32).map(|k| Action::Kernel { op: id, k });
        let noise = |out: &mut Vec<Action>, measurement: bool| {
            if let Some(kind) = c.kind {
                let kind = kind as u32;
                if measurement {
                    out.extend([Action::Insert { kind }, Action::Native { kind }]);
                } else {
                    out.extend([Action::Native { kind }, Action::Insert { kind }]);
                }
                out.push(Action::Correct { op: id });
            }
        };
        let decorations = |out: &mut Vec<Action>, e: &Expansion| {
            out.push(Action::Frame(e.pre));
            if !e.gates.is_empty() {
                for &gate in &e.gates {
                    out.push(Action::DecorationKernel { op: id, gate });
                }
                let kind = c.decoration_kind.expect("decorations have a kind") as u32;
                out.extend([Action::Native { kind }, Action::Insert { kind }]);
                for &gate in &e.gates {
                    out.push(Action::CorrectDecoration { op: id, gate });
                }
            }
            out.push(Action::Frame(e.mid));
        };
        let role = c.operation.role();
        match (role, expansion) {
            (Role::Measure, e) => {
                if let Some(e) = e {
                    decorations(out, e);
                }
                noise(out, true);
                out.extend(kernels);
            }
            (Role::Prepare, e) => {
                out.extend(kernels);
                noise(out, false);
                if let Some(e) = e {
                    decorations(out, e);
                }
            }
            (Role::Gate, Some(e)) => {
                decorations(out, e);
                out.extend(kernels);
                noise(out, false);
                out.push(Action::Frame(e.post));
            }
            (Role::Gate, None) => {
                out.extend(kernels);
                noise(out, false);
            }
        }
    }
}

fn noise_kernels(process: &crate::noise::NoiseProcess) -> Vec<NoiseKernel> {
    process
        .steps()
        .iter()
        .map(|s| match s {
            NoiseStep::Pauli(c) => NoiseKernel::Pauli(c.clone()),
            NoiseStep::Unitary { support, matrix } => NoiseKernel::Unitary { qubits: support.clone(), m: matrix.clone() },
        })
        .collect()
}
