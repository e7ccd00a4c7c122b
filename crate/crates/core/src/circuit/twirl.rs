//! Twirled operations: each non-Pauli operation becomes a short list of
//! operations whose randomly drawn Pauli (and Clifford) decorations cancel in
//! the ideal circuit while converting the noise into Pauli noise.
//!
//! Lists are in time order (first element applied first):
//!
//! | operation                | draws                | list                        |
//! |--------------------------|----------------------|-----------------------------|
//! | Pauli                    |                      | `(α)`                       |
//! | stabilizer gate          | `P`                  | `(α†Pα, α, P)`              |
//! | stabilizer preparation   | `P ∈ {I, κ}`         | `(α, P)`                    |
//! | stabilizer measurement   | `P ∈ {I, κ}`         | `(P, α)`                    |
//! | non-stabilizer gate      | `P, P'`              | `(VP'V, V, P', α, P)`, `V = α†Pα` |
//! | non-stabilizer prep      | `P ∈ {I, κ}, P'`     | `(α, PP'P, P, P')`          |
//! | non-stabilizer measure   | `P ∈ {I, κ}, P'`     | `(PP'P, P, P', α)`          |
//!
//! Layers are twirled component by component with the row of the layer's class.

use rand::Rng;

use crate::circuit::axis::HermitianAxis;
use crate::circuit::gate::{Gate, OpClass, Operation, Role};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::pauli::{Letter, PauliOperator};

/// Length of every twirled operation list after padding with identities.
pub const TWIRLED_LENGTH: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TwirlRow {
    Pauli,
    StabilizerGate,
    StabilizerPrepare,
    StabilizerMeasure,
    NonStabilizerGate,
    NonStabilizerPrepare,
    NonStabilizerMeasure,
}

impl TwirlRow {
    pub fn of(op: &Operation) -> TwirlRow {
        match (op.class(), op.role()) {
            (OpClass::Pauli, _) => TwirlRow::Pauli,
            (OpClass::Stabilizer, Role::Gate) => TwirlRow::StabilizerGate,
            (OpClass::Stabilizer, Role::Prepare) => TwirlRow::StabilizerPrepare,
            (OpClass::Stabilizer, Role::Measure) => TwirlRow::StabilizerMeasure,
            (OpClass::NonStabilizer, Role::Gate) => TwirlRow::NonStabilizerGate,
            (OpClass::NonStabilizer, Role::Prepare) => TwirlRow::NonStabilizerPrepare,
            (OpClass::NonStabilizer, Role::Measure) => TwirlRow::NonStabilizerMeasure,
        }
    }

    fn draws_prime(self) -> bool {
        matches!(self, TwirlRow::NonStabilizerGate | TwirlRow::NonStabilizerPrepare | TwirlRow::NonStabilizerMeasure)
    }

    fn is_gate(self) -> bool {
        matches!(self, TwirlRow::StabilizerGate | TwirlRow::NonStabilizerGate)
    }
}

/// Phase-free Pauli frame on the whole register, as symplectic masks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PauliFrame {
    pub x: u64,
    pub z: u64,
}

impl PauliFrame {
    pub fn from_operator(p: &PauliOperator) -> Self {
        PauliFrame { x: p.x_mask(), z: p.z_mask() }
    }

    /// A local Pauli placed on `qubits`.
    pub fn lift(local: &PauliOperator, qubits: &[usize]) -> Self {
        let mut f = PauliFrame::default();
        for (k, &q) in qubits.iter().enumerate() {
            f.x |= ((local.x_mask() >> k) & 1) << q;
            f.z |= ((local.z_mask() >> k) & 1) << q;
        }
        f
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn to_operator(self, n: usize) -> PauliOperator {
        PauliOperator::from_masks(n, self.x, self.z)
    }
}

impl std::ops::MulAssign for PauliFrame {
    fn mul_assign(&mut self, rhs: PauliFrame) {
        self.x ^= rhs.x;
        self.z ^= rhs.z;
    }
}

/// A drawn twirling decoration that is either a Pauli or a noisy Clifford gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Decoration {
    Pauli(PauliFrame),
    Gate(u32),
}

#[derive(Clone, Debug)]
struct TwirlPart {
    local_paulis: usize,
    /// Pauli `P` drawn uniformly, lifted to the register.
    lift: Vec<PauliFrame>,
    /// `V` for each choice of `P`: `α†Pα` for gates, `P ∈ {I, κ}` otherwise.
    decoration: Vec<Decoration>,
    /// `V P' V` indexed by `P * local_paulis + P'`.
    sandwich: Vec<PauliFrame>,
}

/// The draw made for one twirled operation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TwirlChoice {
    pub p: usize,
    pub p_prime: usize,
}

/// A drawn twirled operation in executable form.
///
/// Gates apply `pre`, the noisy Clifford decorations `gates`, `mid`, the
/// operation, then `post`. Preparations apply the operation first and have no
/// `post`; measurements apply everything before the operation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Expansion {
    pub pre: PauliFrame,
    pub gates: Vec<u32>,
    pub mid: PauliFrame,
    pub post: PauliFrame,
    choices: Vec<TwirlChoice>,
}

impl Expansion {
    pub fn choices(&self) -> &[TwirlChoice] {
        &self.choices
    }

    fn reset(&mut self) {
        self.pre = PauliFrame::default();
        self.mid = PauliFrame::default();
        self.post = PauliFrame::default();
        self.gates.clear();
        self.choices.clear();
    }
}

/// Precomputed twirling tables for one operation.
#[derive(Clone, Debug)]
pub struct TwirlPlan {
    operation: Operation,
    row: TwirlRow,
    parts: Vec<TwirlPart>,
    gates: Vec<Operation>,
}

impl TwirlPlan {
    pub fn new(op: &Operation) -> Result<Self> {
        let row = TwirlRow::of(op);
        let mut plan = TwirlPlan { operation: op.clone(), row, parts: Vec::new(), gates: Vec::new() };
        if row == TwirlRow::Pauli {
            return Ok(plan);
        }
        for comp in op.components() {
            let part = match row {
                TwirlRow::StabilizerGate | TwirlRow::NonStabilizerGate => plan.gate_part(comp)?,
                _ => plan.axis_part(comp)?,
            };
            plan.parts.push(part);
        }
        Ok(plan)
    }

    pub fn operation(&self) -> &Operation {
        &self.operation
    }

    pub fn row(&self) -> TwirlRow {
        self.row
    }

    /// The noisy Clifford decorations any draw may apply.
    pub fn decoration_gates(&self) -> &[Operation] {
        &self.gates
    }

    /// Whether some draw applies a noisy Clifford decoration.
    pub fn has_decoration_gates(&self) -> bool {
        !self.gates.is_empty()
    }

    /// A representative decoration layer: one non-Pauli decoration per component that has one.
    pub fn decoration_representative(&self) -> Option<Operation> {
        let reps: Vec<Operation> = self
            .parts
            .iter()
            .filter_map(|part| {
                part.decoration.iter().find_map(|d| match d {
                    Decoration::Gate(id) => Some(self.gates[*id as usize].clone()),
                    Decoration::Pauli(_) => None,
                })
            })
            .collect();
        match reps.len() {
            0 => None,
            1 => reps.into_iter().next(),
            _ => Some(Operation::layer("V", reps).expect("components act on disjoint qubits")),
        }
    }

    fn add_gate(&mut self, op: Operation) -> u32 {
        if let Some(i) = self.gates.iter().position(|g| *g == op) {
            return i as u32;
        }
        self.gates.push(op);
        (self.gates.len() - 1) as u32
    }

    fn gate_part(&mut self, comp: &Operation) -> Result<TwirlPart> {
        let qubits = comp.qubits().to_vec();
        let q = qubits.len();
        let u = comp.unitary().ok_or_else(|| Error::Contract(format!("cannot twirl {comp}: no unitary")))?;
        let u_dag = linalg::dagger(&u);
        let local_paulis = 1usize << (2 * q);
        let lift: Vec<PauliFrame> = PauliOperator::all(q).map(|p| PauliFrame::lift(&p, &qubits)).collect();
        let mut decoration = Vec::with_capacity(local_paulis);
        let mut sandwich = vec![PauliFrame::default(); local_paulis * local_paulis];
        for (pi, p) in PauliOperator::all(q).enumerate() {
            // α†Pα
            let v = &u_dag * linalg::pauli_matrix(&p) * &u;
            if let Some(vp) = linalg::pauli_of_matrix(&v, 1e-9) {
                decoration.push(Decoration::Pauli(PauliFrame::lift(&vp, &qubits)));
                for (pj, pp) in PauliOperator::all(q).enumerate() {
                    sandwich[pi * local_paulis + pj] = PauliFrame::lift(&pp, &qubits);
                }
                continue;
            }
            if self.row != TwirlRow::NonStabilizerGate || q != 1 {
                return Err(Error::Contract(format!("cannot twirl {comp}: only single-qubit non-Clifford gates are supported")));
            }
            let axis = HermitianAxis::from_matrix(&v)
                .ok_or_else(|| Error::Contract(format!("cannot twirl {comp}: decoration is not a Hermitian Clifford")))?;
            let id = self.add_gate(Operation::reflection(axis, qubits[0]));
            decoration.push(Decoration::Gate(id));
            for (pj, pp) in PauliOperator::all(q).enumerate() {
                let s = conjugate(&v, &pp, comp)?;
                sandwich[pi * local_paulis + pj] = PauliFrame::lift(&s, &qubits);
            }
        }
        Ok(TwirlPart { local_paulis, lift, decoration, sandwich })
    }

    fn axis_part(&mut self, comp: &Operation) -> Result<TwirlPart> {
        let axis = comp.axis().ok_or_else(|| Error::Contract(format!("cannot twirl {comp}")))?;
        let qubits = comp.qubits().to_vec();
        let lift: Vec<PauliFrame> = PauliOperator::all(1).map(|p| PauliFrame::lift(&p, &qubits)).collect();
        let (kappa, kappa_matrix) = match axis.as_pauli() {
            Some((letter, _)) => {
                let p = PauliOperator::single(1, 0, letter);
                (Decoration::Pauli(PauliFrame::lift(&p, &qubits)), linalg::pauli_matrix(&p))
            }
            None => (Decoration::Gate(self.add_gate(Operation::reflection(axis, qubits[0]))), axis.matrix()),
        };
        let decoration = vec![Decoration::Pauli(PauliFrame::default()), kappa];
        let mut sandwich = vec![PauliFrame::default(); 2 * 4];
        for (pj, pp) in PauliOperator::all(1).enumerate() {
            sandwich[pj] = PauliFrame::lift(&pp, &qubits);
            let s = conjugate(&kappa_matrix, &pp, comp)?;
            sandwich[4 + pj] = PauliFrame::lift(&s, &qubits);
        }
        Ok(TwirlPart { local_paulis: 4, lift, decoration, sandwich })
    }

    fn choice_count(&self, part: &TwirlPart) -> usize {
        if self.row.is_gate() {
            part.local_paulis
        } else {
            2
        }
    }

    /// Draws the twirl into `out`, reusing its buffers.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Expansion) {
        out.reset();
        for part in &self.parts {
            let p = rng.gen_range(0..self.choice_count(part));
            let p_prime = if self.row.draws_prime() { rng.gen_range(0..part.local_paulis) } else { 0 };
            self.apply_choice(part, &TwirlChoice { p, p_prime }, out);
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Expansion {
        let mut out = Expansion::default();
        self.draw_into(rng, &mut out);
        out
    }

    /// The expansion for explicit choices, one per component.
    pub fn expansion_for(&self, choices: &[TwirlChoice]) -> Result<Expansion> {
        if choices.len() != self.parts.len() {
            return Err(Error::Dimension(format!("{} choices for {} components", choices.len(), self.parts.len())));
        }
        let mut out = Expansion::default();
        for (part, choice) in self.parts.iter().zip(choices) {
            if choice.p >= self.choice_count(part) || choice.p_prime >= part.local_paulis {
                return Err(Error::Domain("twirl choice out of range".into()));
            }
            self.apply_choice(part, choice, &mut out);
        }
        Ok(out)
    }

    /// Every combination of choices, for exact enumeration.
    pub fn all_choices(&self) -> Vec<Vec<TwirlChoice>> {
        let mut all = vec![Vec::new()];
        for part in &self.parts {
            let primes = if self.row.draws_prime() { part.local_paulis } else { 1 };
            let mut next = Vec::new();
            for prefix in &all {
                for p in 0..self.choice_count(part) {
                    for p_prime in 0..primes {
                        let mut v = prefix.clone();
                        v.push(TwirlChoice { p, p_prime });
                        next.push(v);
                    }
                }
            }
            all = next;
        }
        all
    }

    fn apply_choice(&self, part: &TwirlPart, choice: &TwirlChoice, out: &mut Expansion) {
        if self.row.draws_prime() {
            out.pre *= part.sandwich[choice.p * part.local_paulis + choice.p_prime];
        }
        match part.decoration[choice.p] {
            Decoration::Pauli(f) => out.pre *= f,
            Decoration::Gate(id) => out.gates.push(id),
        }
        if self.row.draws_prime() {
            out.mid *= part.lift[choice.p_prime];
        }
        if self.row.is_gate() {
            out.post *= part.lift[choice.p];
        }
        out.choices.push(choice.clone());
    }

    /// The twirled operation list of an expansion, padded to five entries.
    pub fn operations(&self, e: &Expansion) -> Vec<Operation> {
        let op = &self.operation;
        if self.row == TwirlRow::Pauli {
            let mut list = vec![identity_on(op.qubits()); TWIRLED_LENGTH - 1];
            list.push(op.clone());
            return list;
        }
        let frame = |f: PauliFrame| frame_operation(f, op.qubits());
        let decorations = {
            let mut comps: Vec<Operation> = e.gates.iter().map(|&g| self.gates[g as usize].clone()).collect();
            let covered: Vec<usize> = comps.iter().flat_map(|c| c.qubits().to_vec()).collect();
            for &q in op.qubits() {
                if !covered.contains(&q) {
                    comps.push(identity_on(&[q]));
                }
            }
            if comps.len() == 1 {
                comps.pop().unwrap()
            } else {
                Operation::layer(&format!("V:{}", op.key()), comps).expect("disjoint decorations")
            }
        };
        let list = match self.row {
            TwirlRow::StabilizerGate => vec![frame(e.pre), op.clone(), frame(e.post)],
            TwirlRow::NonStabilizerGate => vec![frame(e.pre), decorations, frame(e.mid), op.clone(), frame(e.post)],
            TwirlRow::StabilizerPrepare => vec![op.clone(), frame(e.pre)],
            TwirlRow::StabilizerMeasure => vec![frame(e.pre), op.clone()],
            TwirlRow::NonStabilizerPrepare => vec![op.clone(), frame(e.pre), decorations, frame(e.mid)],
            TwirlRow::NonStabilizerMeasure => vec![frame(e.pre), decorations, frame(e.mid), op.clone()],
            TwirlRow::Pauli => unreachable!(),
        };
        let mut padded = vec![identity_on(op.qubits()); TWIRLED_LENGTH - list.len()];
        padded.extend(list);
        padded
    }
}

fn conjugate(v: &CMatrix, p: &PauliOperator, comp: &Operation) -> Result<PauliOperator> {
    linalg::conjugate_pauli(v, p).ok_or_else(|| Error::Contract(format!("cannot twirl {comp}: decoration is not Clifford")))
}

fn identity_on(qubits: &[usize]) -> Operation {
    Operation::pauli(PauliOperator::identity(qubits.len()), qubits.to_vec()).expect("arity matches")
}

fn frame_operation(f: PauliFrame, qubits: &[usize]) -> Operation {
    let letters: Vec<Letter> = qubits.iter().map(|&q| Letter::from_bits((f.x >> q) & 1 == 1, (f.z >> q) & 1 == 1)).collect();
    Operation::new(Gate::Pauli(PauliOperator::from_letters(&letters)), qubits.to_vec()).expect("arity matches")
}

/// Draws the twirled operation list `T(α)` of `op`, padded to five entries.
pub fn twirl_expand<R: Rng + ?Sized>(op: &Operation, rng: &mut R) -> Result<Vec<Operation>> {
    let plan = TwirlPlan::new(op)?;
    let e = plan.draw(rng);
    Ok(plan.operations(&e))
}
