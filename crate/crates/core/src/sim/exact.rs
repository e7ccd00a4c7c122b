use crate::circuit::{Circuit, CompiledCircuit, OutcomeRef, Outcomes, PauliFrame};
use crate::error::{Error, Result};
use crate::pauli::SpacetimeError;
use crate::sim::program::{Action, Kernel, Program};
use crate::sim::state::{DensityState, PROBABILITY_FLOOR};
use std::sync::Arc;

/// Largest number of leaves an exact enumeration may produce.
pub const MAX_BRANCHES: usize = 1 << 20;

/// Native noise used by the exact enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactNoise {
    Off,
    Scenario(usize),
    /// Weighted average over all scenarios.
    Mixture,
}

/// One leaf of the enumeration: a `λ`, a full outcome record and its probability.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub lambda: usize,
    pub outcomes: Outcomes,
    pub probability: f64,
}

struct Walk<'a> {
    program: &'a Program,
    scenario: Option<usize>,
    insertion: Option<&'a SpacetimeError>,
    lambda: usize,
    out: Vec<Branch>,
}

/// Enumerates every `λ`, twirl draw and measurement branch with its exact probability.
///
/// Native noise is applied as channels and insertion cells as Pauli
/// conjugations. Twirl draws are averaged and do not appear in the leaves.
pub fn enumerate(program: &Program, noise: ExactNoise, insertion: Option<&SpacetimeError>) -> Result<Vec<Branch>> {
    let compiled = program.compiled();
    let scenarios: Vec<(Option<usize>, f64)> = match noise {
        ExactNoise::Off => vec![(None, 1.0)],
        ExactNoise::Scenario(s) => {
            if s >= program.scenario_count() {
                return Err(Error::Contract("noise scenario out of range".into()));
            }
            vec![(Some(s), 1.0)]
        }
        ExactNoise::Mixture => {
            let table = program.noise().ok_or_else(|| Error::Contract("no noise table".into()))?;
            table.scenarios().iter().enumerate().map(|(i, s)| (Some(i), s.weight)).collect()
        }
    };
    let mut out = Vec::new();
    for (scenario, sw) in scenarios {
        for (lambda, lw) in compiled.circuit().lambda_weights().iter().enumerate() {
            let mut walk = Walk { program, scenario, insertion, lambda, out: Vec::new() };
            let state = DensityState::new(program.qubit_count())?;
            walk.slot(0, state, compiled.new_outcomes(), vec![0; compiled.kinds().len()], sw * lw)?;
            out.extend(walk.out);
        }
    }
    Ok(merge(out))
}

fn merge(mut branches: Vec<Branch>) -> Vec<Branch> {
    branches.sort_by(|a, b| (a.lambda, a.outcomes.values()).cmp(&(b.lambda, b.outcomes.values())));
    let mut merged: Vec<Branch> = Vec::with_capacity(branches.len());
    for b in branches {
        match merged.last_mut() {
            Some(last) if last.lambda == b.lambda && last.outcomes == b.outcomes => last.probability += b.probability,
            _ => merged.push(b),
        }
    }
    merged
}

impl Walk<'_> {
    fn slot(&mut self, slot: usize, state: DensityState, outcomes: Outcomes, flags: Vec<usize>, weight: f64) -> Result<()> {
        let compiled = self.program.compiled();
        if slot == compiled.slot_count() {
            if self.out.len() >= MAX_BRANCHES {
                return Err(Error::Scale(format!("exact enumeration exceeds {MAX_BRANCHES} branches")));
            }
            let probability = weight * state.trace();
            self.out.push(Branch { lambda: self.lambda, outcomes, probability });
            return Ok(());
        }
        let Some(op) = compiled.resolve(slot, self.lambda, &outcomes) else {
            return self.slot(slot + 1, state, outcomes, flags, weight);
        };
        let mut actions = Vec::new();
        match &compiled.ops()[op].plan {
            None => {
                self.program.plan_slot(op, None, &mut actions);
                self.actions(&actions, 0, slot, state, outcomes, flags, weight)
            }
            Some(plan) => {
                let choices = plan.all_choices();
                let w = weight / choices.len() as f64;
                for choice in choices {
                    let e = plan.expansion_for(&choice)?;
                    actions.clear();
                    self.program.plan_slot(op, Some(&e), &mut actions);
                    self.actions(&actions, 0, slot, state.clone(), outcomes.clone(), flags.clone(), w)?;
                }
                Ok(())
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn actions(
        &mut self,
        actions: &[Action],
        start: usize,
        slot: usize,
        mut state: DensityState,
        outcomes: Outcomes,
        mut flags: Vec<usize>,
        weight: f64,
    ) -> Result<()> {
        let program = self.program;
        for i in start..actions.len() {
            match actions[i] {
                Action::Frame(f) => state.apply_pauli(f),
                Action::Kernel { op, k } => match program.kernel(op, k) {
                    Kernel::Measure { q, axis, bit } => {
                        for m in [1i8, -1] {
                            let mut branch = state.clone();
                            if branch.project(*q, axis, m) < PROBABILITY_FLOOR {
                                continue;
                            }
                            let mut o = outcomes.clone();
                            o.set(OutcomeRef { slot, bit: *bit }, m);
                            self.actions(actions, i + 1, slot, branch, o, flags.clone(), weight)?;
                        }
                        return Ok(());
                    }
                    kernel => kernel.apply(&mut state)?,
                },
                Action::DecorationKernel { op, gate } => program.decoration_kernel(op, gate).apply(&mut state)?,
                Action::Native { kind } => {
                    if let Some(s) = self.scenario {
                        for k in program.noise_kernels(s, kind as usize) {
                            k.apply_exact(&mut state)?;
                        }
                    }
                }
                Action::Insert { kind } => {
                    let kind = kind as usize;
                    let j = flags[kind];
                    flags[kind] += 1;
                    if let Some(e) = self.insertion {
                        if let Some(pos) = e.layout().position_of_kind(kind) {
                            if j >= e.layout().entries()[pos].slots {
                                return Err(Error::Contract("kind occurs more often than its maximum count".into()));
                            }
                            state.apply_pauli(PauliFrame::lift(&e.cell(pos, j), program.support(kind)));
                        }
                    }
                }
                Action::Correct { .. } | Action::CorrectDecoration { .. } => {}
            }
        }
        self.slot(slot + 1, state, outcomes, flags, weight)
    }
}

/// `Σ_branches P · a(λ, μ)`.
pub fn expectation(program: &Program, branches: &[Branch]) -> f64 {
    let observable = program.compiled().circuit().observable();
    branches.iter().map(|b| b.probability * observable.evaluate(b.lambda, &b.outcomes)).sum()
}

/// Exact `E[a]` of a program under the given noise and insertion.
pub fn exact_expectation(program: &Program, noise: ExactNoise, insertion: Option<&SpacetimeError>) -> Result<f64> {
    let branches = enumerate(program, noise, insertion)?;
    Ok(expectation(program, &branches))
}

/// Noise-free `E[a]` of a circuit.
pub fn ideal_expectation(circuit: &Circuit) -> Result<f64> {
    let program = Program::new(Arc::new(CompiledCircuit::new(circuit, false)?), None)?;
    exact_expectation(&program, ExactNoise::Off, None)
}
