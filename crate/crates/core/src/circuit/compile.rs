use std::collections::BTreeMap;
use std::sync::Arc;

use crate::circuit::dynamic::{Circuit, Condition, Outcomes, MAX_ENUMERATED_OUTCOMES};
use crate::circuit::gate::{OpClass, Operation};
use crate::circuit::twirl::{TwirlPlan, TwirlRow};
use crate::error::{Error, Result};

/// An operation kind `α`: every slot occurrence shares one noise map.
#[derive(Clone, Debug, PartialEq)]
pub struct KindInfo {
    pub key: String,
    /// Representative operation, used to select noise and build samplers.
    pub operation: Operation,
    /// For twirling decorations, the kind they decorate.
    pub decoration_of: Option<usize>,
}

/// `N_α^max` for every non-Pauli kind.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MaxCounts {
    counts: BTreeMap<String, usize>,
}

impl MaxCounts {
    pub fn get(&self, key: &str) -> usize {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn into_map(self) -> BTreeMap<String, usize> {
        self.counts
    }
}

#[derive(Clone, Debug)]
pub struct CompiledOp {
    pub operation: Operation,
    /// `None` for Pauli operations, which are error-free.
    pub kind: Option<usize>,
    pub plan: Option<TwirlPlan>,
    pub decoration_kind: Option<usize>,
}

#[derive(Clone, Debug)]
struct CompiledCase {
    lambda: Option<usize>,
    when: Vec<Condition>,
    op: Option<usize>,
}

#[derive(Clone, Debug)]
struct CompiledSlot {
    cases: Vec<CompiledCase>,
    default: Option<usize>,
}

/// A circuit with its operations resolved to kinds and twirl plans.
#[derive(Clone, Debug)]
pub struct CompiledCircuit {
    circuit: Arc<Circuit>,
    twirl: bool,
    ops: Vec<CompiledOp>,
    slots: Vec<CompiledSlot>,
    kinds: Vec<KindInfo>,
    counts: Vec<usize>,
    widths: Vec<usize>,
}

impl CompiledCircuit {
    /// Compiles `circuit`; with `twirl` the slots flagged for twirling are expanded by their twirl rows at run time.
    pub fn new(circuit: &Circuit, twirl: bool) -> Result<Self> {
        let mut compiled = CompiledCircuit {
            circuit: Arc::new(circuit.clone()),
            twirl,
            ops: Vec::new(),
            slots: Vec::new(),
            kinds: Vec::new(),
            counts: Vec::new(),
            widths: circuit.widths(),
        };
        for slot in circuit.slots() {
            let mut cases = Vec::with_capacity(slot.cases.len());
            for case in &slot.cases {
                let op = match &case.op {
                    Some(op) => Some(compiled.add_op(op, twirl && slot.twirl)?),
                    None => None,
                };
                cases.push(CompiledCase { lambda: case.lambda, when: case.when.clone(), op });
            }
            let default = match &slot.default {
                Some(op) => Some(compiled.add_op(op, twirl && slot.twirl)?),
                None => None,
            };
            compiled.slots.push(CompiledSlot { cases, default });
        }
        compiled.counts = compiled.enumerate_counts()?;
        Ok(compiled)
    }

    fn kind_index(&mut self, key: String, operation: Operation, decoration_of: Option<usize>) -> Result<usize> {
        if let Some(i) = self.kinds.iter().position(|k| k.key == key) {
            if self.kinds[i].operation != operation {
                return Err(Error::Config(format!("operation kind '{key}' is used for different operations")));
            }
            return Ok(i);
        }
        self.kinds.push(KindInfo { key, operation, decoration_of });
        Ok(self.kinds.len() - 1)
    }

    fn add_op(&mut self, op: &Operation, twirl: bool) -> Result<usize> {
        if let Some(i) = self.ops.iter().position(|c| c.operation == *op && c.plan.is_some() == twirl) {
            return Ok(i);
        }
        let kind = match op.class() {
            OpClass::Pauli => None,
            _ => Some(self.kind_index(op.key(), op.clone(), None)?),
        };
        let (plan, decoration_kind) = if twirl && TwirlRow::of(op) != TwirlRow::Pauli {
            let plan = TwirlPlan::new(op)?;
            let decoration_kind = match plan.decoration_representative() {
                Some(rep) => Some(self.kind_index(format!("V:{}", op.key()), rep, kind)?),
                None => None,
            };
            (Some(plan), decoration_kind)
        } else {
            (None, None)
        };
        self.ops.push(CompiledOp { operation: op.clone(), kind, plan, decoration_kind });
        Ok(self.ops.len() - 1)
    }

    fn enumerate_counts(&self) -> Result<Vec<usize>> {
        let conditioned = self.circuit.conditioned_outcomes();
        if conditioned.len() > MAX_ENUMERATED_OUTCOMES {
            return self.declared_counts();
        }
        let mut best = vec![0usize; self.kinds.len()];
        let mut outcomes = Outcomes::new(&self.widths);
        let mut current = vec![0usize; self.kinds.len()];
        for lambda in 0..self.circuit.lambda_weights().len() {
            for bits in 0..1u64 << conditioned.len() {
                for (k, r) in conditioned.iter().enumerate() {
                    outcomes.set(*r, if (bits >> k) & 1 == 1 { -1 } else { 1 });
                }
                current.iter_mut().for_each(|c| *c = 0);
                for slot in 0..self.slots.len() {
                    if let Some(id) = self.resolve(slot, lambda, &outcomes) {
                        let op = &self.ops[id];
                        for kind in op.kind.iter().chain(op.decoration_kind.iter()) {
                            current[*kind] += 1;
                        }
                    }
                }
                for (b, c) in best.iter_mut().zip(&current) {
                    *b = (*b).max(*c);
                }
            }
        }
        Ok(best)
    }

    fn declared_counts(&self) -> Result<Vec<usize>> {
        let declared = self
            .circuit
            .declared_max_counts()
            .ok_or_else(|| Error::Config("branch space too large to enumerate and no declared_max_counts given".into()))?;
        self.kinds
            .iter()
            .map(|k| declared.get(&k.key).copied().ok_or_else(|| Error::Config(format!("declared_max_counts lacks kind '{}'", k.key))))
            .collect()
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn is_twirled(&self) -> bool {
        self.twirl
    }

    pub fn ops(&self) -> &[CompiledOp] {
        &self.ops
    }

    pub fn kinds(&self) -> &[KindInfo] {
        &self.kinds
    }

    pub fn kind_by_key(&self, key: &str) -> Option<usize> {
        self.kinds.iter().position(|k| k.key == key)
    }

    /// `N_α^max` per kind, in kind order.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn max_counts(&self) -> MaxCounts {
        MaxCounts { counts: self.kinds.iter().zip(&self.counts).map(|(k, c)| (k.key.clone(), *c)).collect() }
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn new_outcomes(&self) -> Outcomes {
        Outcomes::new(&self.widths)
    }

    /// The compiled operation a slot resolves to.
    pub fn resolve(&self, slot: usize, lambda: usize, outcomes: &Outcomes) -> Option<usize> {
        let s = &self.slots[slot];
        for case in &s.cases {
            if case.lambda.is_some_and(|l| l != lambda) {
                continue;
            }
            if case.when.iter().all(|c| outcomes.get(c.outcome) == c.value) {
                return case.op;
            }
        }
        s.default
    }
}

/// `N_α^max` of the (optionally twirled) circuit: the largest number of
/// occurrences of each non-Pauli kind over `λ` and outcome branches.
pub fn max_operation_counts(circuit: &Circuit, twirl: bool) -> Result<MaxCounts> {
    Ok(CompiledCircuit::new(circuit, twirl)?.max_counts())
}
