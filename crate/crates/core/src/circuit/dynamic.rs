use std::collections::BTreeMap;

use crate::circuit::axis::HermitianAxis;
use crate::circuit::gate::Operation;
use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliOperator};

/// Largest number of outcome bits enumerated when maximising over branches.
pub const MAX_ENUMERATED_OUTCOMES: usize = 20;

/// One recorded outcome: bit `bit` of slot `slot`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutcomeRef {
    pub slot: usize,
    pub bit: usize,
}

/// Requires a previously recorded outcome to equal `value` (±1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Condition {
    pub outcome: OutcomeRef,
    pub value: i8,
}

/// One row of a slot's lookup table.
#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    /// Internal-variable value the case applies to; `None` matches every value.
    pub lambda: Option<usize>,
    pub when: Vec<Condition>,
    /// `None` leaves the slot empty.
    pub op: Option<Operation>,
}

/// A position in the circuit whose operation depends on `λ` and earlier outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct Slot {
    pub cases: Vec<Case>,
    pub default: Option<Operation>,
    pub twirl: bool,
}

impl Slot {
    pub fn fixed(op: Operation) -> Self {
        Slot { cases: Vec::new(), default: Some(op), twirl: true }
    }

    pub fn resolve(&self, lambda: usize, outcomes: &Outcomes) -> Option<&Operation> {
        for case in &self.cases {
            if case.lambda.is_some_and(|l| l != lambda) {
                continue;
            }
            if case.when.iter().all(|c| outcomes.get(c.outcome) == c.value) {
                return case.op.as_ref();
            }
        }
        self.default.as_ref()
    }

    /// Every operation the slot can resolve to.
    pub fn operations(&self) -> impl Iterator<Item = &Operation> {
        self.cases.iter().filter_map(|c| c.op.as_ref()).chain(self.default.as_ref())
    }

    pub fn width(&self) -> usize {
        self.operations().map(|o| o.measurement_count()).max().unwrap_or(0)
    }
}

/// `coefficient · Π μ_f` over the listed outcomes, active for one `λ` or all.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableTerm {
    pub lambda: Option<usize>,
    pub coefficient: f64,
    pub factors: Vec<OutcomeRef>,
}

/// The observable function `a(λ, μ)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Observable {
    pub terms: Vec<ObservableTerm>,
}

impl Observable {
    pub fn evaluate(&self, lambda: usize, outcomes: &Outcomes) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.lambda.is_none_or(|l| l == lambda))
            .map(|t| t.coefficient * t.factors.iter().map(|f| outcomes.get(*f) as f64).product::<f64>())
            .sum()
    }

    /// Outcomes the observable reads, sorted.
    pub fn referenced(&self) -> Vec<OutcomeRef> {
        let mut refs: Vec<OutcomeRef> = self.terms.iter().flat_map(|t| t.factors.iter().copied()).collect();
        refs.sort();
        refs.dedup();
        refs
    }
}

/// Flat outcome record with a fixed offset per slot; `0` marks an unrecorded outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcomes {
    offsets: std::sync::Arc<[usize]>,
    values: Vec<i8>,
}

impl Outcomes {
    pub fn new(widths: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(widths.len() + 1);
        let mut total = 0;
        for w in widths {
            offsets.push(total);
            total += w;
        }
        offsets.push(total);
        Outcomes { offsets: offsets.into(), values: vec![0; total] }
    }

    pub fn get(&self, r: OutcomeRef) -> i8 {
        self.slot(r.slot).get(r.bit).copied().unwrap_or(0)
    }

    pub fn set(&mut self, r: OutcomeRef, value: i8) {
        let i = self.offsets[r.slot] + r.bit;
        self.values[i] = value;
    }

    pub fn slot(&self, slot: usize) -> &[i8] {
        &self.values[self.offsets[slot]..self.offsets[slot + 1]]
    }

    pub fn slot_mut(&mut self, slot: usize) -> &mut [i8] {
        &mut self.values[self.offsets[slot]..self.offsets[slot + 1]]
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0);
    }
}

/// A randomized dynamic circuit with its observable.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    qubit_count: usize,
    lambda_weights: Vec<f64>,
    slots: Vec<Slot>,
    observable: Observable,
    declared_max_counts: Option<BTreeMap<String, usize>>,
}

impl Circuit {
    pub fn new(qubit_count: usize) -> Self {
        Circuit { qubit_count, lambda_weights: vec![1.0], slots: Vec::new(), observable: Observable::default(), declared_max_counts: None }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn lambda_weights(&self) -> &[f64] {
        &self.lambda_weights
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn declared_max_counts(&self) -> Option<&BTreeMap<String, usize>> {
        self.declared_max_counts.as_ref()
    }

    /// Sets `w(λ)`; the weights must be positive and are normalised.
    pub fn set_lambda_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Config("lambda weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        self.lambda_weights = weights.into_iter().map(|w| w / total).collect();
        Ok(())
    }

    pub fn set_declared_max_counts(&mut self, counts: BTreeMap<String, usize>) {
        self.declared_max_counts = Some(counts);
    }

    /// Appends a slot holding a fixed operation; returns the slot index.
    pub fn push(&mut self, op: Operation) -> Result<usize> {
        self.push_slot(Slot::fixed(op))
    }

    pub fn push_slot(&mut self, slot: Slot) -> Result<usize> {
        let index = self.slots.len();
        for op in slot.operations() {
            if let Some(q) = op.qubits().iter().find(|&&q| q >= self.qubit_count) {
                return Err(Error::Dimension(format!("slot {index}: qubit {q} outside a {}-qubit circuit", self.qubit_count)));
            }
        }
        for case in &slot.cases {
            if case.lambda.is_some_and(|l| l >= self.lambda_weights.len()) {
                return Err(Error::Config(format!("slot {index}: lambda value outside the domain")));
            }
            for c in &case.when {
                self.check_outcome(c.outcome, index)?;
                if c.value != 1 && c.value != -1 {
                    return Err(Error::Config(format!("slot {index}: conditions compare with +1 or -1")));
                }
            }
        }
        self.slots.push(slot);
        Ok(index)
    }

    fn check_outcome(&self, r: OutcomeRef, before: usize) -> Result<()> {
        if r.slot >= before || r.bit >= self.slots[r.slot].width() {
            return Err(Error::Config(format!("outcome {}:{} is not recorded before slot {before}", r.slot, r.bit)));
        }
        Ok(())
    }

    pub fn set_observable(&mut self, observable: Observable) -> Result<()> {
        for t in &observable.terms {
            if t.lambda.is_some_and(|l| l >= self.lambda_weights.len()) {
                return Err(Error::Config("observable term lambda outside the domain".into()));
            }
            for f in &t.factors {
                self.check_outcome(*f, self.slots.len())?;
            }
        }
        self.observable = observable;
        Ok(())
    }

    /// Measures `Σ_i c_i P_i` by drawing term `i` with probability `|c_i|/‖c‖₁` as `λ`.
    ///
    /// Each term measures its Pauli letter-wise on fresh slots; `a` is
    /// `sign(c_i) ‖c‖₁ Π μ`. The circuit must not use `λ` already.
    pub fn measure_pauli_sum(&mut self, terms: &[(f64, PauliOperator)]) -> Result<()> {
        if self.lambda_weights.len() != 1 {
            return Err(Error::Config("a Pauli-sum observable needs a circuit without lambda".into()));
        }
        if terms.is_empty() || terms.iter().any(|(c, p)| *c == 0.0 || p.qubit_count() != self.qubit_count) {
            return Err(Error::Config("Pauli-sum terms need nonzero coefficients on every circuit qubit".into()));
        }
        let norm: f64 = terms.iter().map(|(c, _)| c.abs()).sum();
        if terms.len() > 1 {
            self.set_lambda_weights(terms.iter().map(|(c, _)| c.abs()).collect())?;
        }
        let mut observable = Observable::default();
        for q in 0..self.qubit_count {
            let mut slot = Slot { cases: Vec::new(), default: None, twirl: true };
            for (i, (_, p)) in terms.iter().enumerate() {
                let letter = p.letter(q);
                if letter != Letter::I {
                    let op = Operation::measure(HermitianAxis::pauli(letter), q);
                    slot.cases.push(Case { lambda: (terms.len() > 1).then_some(i), when: Vec::new(), op: Some(op) });
                }
            }
            if !slot.cases.is_empty() {
                self.push_slot(slot)?;
            }
        }
        let first = self.slots.len() - terms.iter().fold(0u64, |acc, (_, p)| acc | p.x_mask() | p.z_mask()).count_ones() as usize;
        for (i, (c, p)) in terms.iter().enumerate() {
            let mut factors = Vec::new();
            let mut slot = first;
            for q in 0..self.qubit_count {
                let used = terms.iter().any(|(_, t)| t.letter(q) != Letter::I);
                if used {
                    if p.letter(q) != Letter::I {
                        factors.push(OutcomeRef { slot, bit: 0 });
                    }
                    slot += 1;
                }
            }
            observable.terms.push(ObservableTerm { lambda: (terms.len() > 1).then_some(i), coefficient: c.signum() * norm, factors });
        }
        self.set_observable(observable)
    }

    /// Number of outcome bits recorded by each slot.
    pub fn widths(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.width()).collect()
    }

    /// Outcomes that some condition reads.
    pub fn conditioned_outcomes(&self) -> Vec<OutcomeRef> {
        let mut refs: Vec<OutcomeRef> =
            self.slots.iter().flat_map(|s| s.cases.iter().flat_map(|c| c.when.iter().map(|w| w.outcome))).collect();
        refs.sort();
        refs.dedup();
        refs
    }

    /// `‖a‖_∞`: the largest `|a(λ, μ)|` over `λ` and ±1 values of the outcomes it reads.
    pub fn sup_norm(&self) -> Result<f64> {
        let refs = self.observable.referenced();
        if refs.len() > MAX_ENUMERATED_OUTCOMES {
            return Err(Error::Scale(format!("observable reads {} outcomes", refs.len())));
        }
        let mut outcomes = Outcomes::new(&self.widths());
        let mut best: f64 = 0.0;
        for lambda in 0..self.lambda_weights.len() {
            for bits in 0..1u64 << refs.len() {
                for (k, r) in refs.iter().enumerate() {
                    outcomes.set(*r, if (bits >> k) & 1 == 1 { -1 } else { 1 });
                }
                best = best.max(self.observable.evaluate(lambda, &outcomes).abs());
            }
        }
        Ok(best)
    }
}
