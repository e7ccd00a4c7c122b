//! TOML experiment configuration.
//!
//! ```toml
//! seed = 7
//! sampler = "practical"
//!
//! [circuit]
//! builtin = "trotter"
//! steps = 8
//!
//! [noise]
//! params = { p = 0.001 }
//! [[noise.rules]]
//! channels = [{ kind = "depolarizing", p = "p" }]
//!
//! [run]
//! shots = 100000
//! rate_draws = [10000, 100000, 1000000]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::{
    spatial_circuit, trotter_circuit, Case, Circuit, CompiledCircuit, Condition, Gate, HermitianAxis, Observable, ObservableTerm,
    Operation, OutcomeRef, Slot,
};
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::pauli::PauliOperator;
use crate::sampler::SamplerChoice;

fn yes() -> bool {
    true
}

fn default_repetitions() -> u32 {
    30
}

fn default_shots() -> u64 {
    10_000
}

fn default_rate_draws() -> Vec<u64> {
    vec![10_000]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sampler: SamplerChoice,
    #[serde(default = "yes")]
    pub twirl: bool,
    pub circuit: CircuitSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub run: RunSpec,
}

/// Monte Carlo budgets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// `M`: mitigation shots per repetition.
    #[serde(default = "default_shots")]
    pub shots: u64,
    /// `M_P` values; the last is used when a single value is needed.
    #[serde(default = "default_rate_draws")]
    pub rate_draws: Vec<u64>,
    /// `R`: independent repetitions.
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    /// Nontrivial-error boost `q` of the error sampler.
    #[serde(default)]
    pub boost: f64,
    /// Use this `P̂` instead of estimating it.
    #[serde(default)]
    pub injected_rate: Option<f64>,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            shots: default_shots(),
            rate_draws: default_rate_draws(),
            repetitions: default_repetitions(),
            boost: 0.0,
            injected_rate: None,
        }
    }
}

impl RunSpec {
    pub fn rate_draws_max(&self) -> u64 {
        self.rate_draws.iter().copied().max().unwrap_or(0)
    }
}

/// A built-in circuit or an explicit slot list.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    /// `trotter` or `spatial`.
    #[serde(default)]
    pub builtin: Option<String>,
    /// Trotter steps of the `trotter` circuit.
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub qubits: Option<usize>,
    #[serde(default)]
    pub lambda_weights: Option<Vec<f64>>,
    #[serde(default)]
    pub slots: Vec<SlotSpec>,
    /// Product terms over recorded outcomes.
    #[serde(default)]
    pub observable: Vec<TermSpec>,
    /// Alternative to `observable`: a Pauli sum measured on appended slots.
    #[serde(default)]
    pub pauli_observable: Vec<PauliTermSpec>,
    #[serde(default)]
    pub declared_max_counts: Option<BTreeMap<String, usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpSpec {
    /// `H`, `S`, `T`, `CNOT`, `DELAY`, `PAULI`, `V`, `PREP`, `MEAS` or `LAYER`.
    pub gate: String,
    #[serde(default)]
    pub qubits: Vec<usize>,
    /// Axis of `V`, `PREP` and `MEAS`, e.g. `"X"` or `"X+Y"`.
    #[serde(default)]
    pub axis: Option<String>,
    /// Pauli string of `PAULI`.
    #[serde(default)]
    pub pauli: Option<String>,
    /// Name of a `LAYER`.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub ops: Vec<OpSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotSpec {
    /// Fixed operation, or the fallback when `cases` is present.
    #[serde(default)]
    pub op: Option<OpSpec>,
    #[serde(default)]
    pub cases: Vec<CaseSpec>,
    #[serde(default = "yes")]
    pub twirl: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    #[serde(default)]
    pub lambda: Option<usize>,
    #[serde(default)]
    pub when: Vec<ConditionSpec>,
    /// Missing: the slot stays empty.
    #[serde(default)]
    pub op: Option<OpSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSpec {
    pub slot: usize,
    #[serde(default)]
    pub bit: usize,
    pub value: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(default = "unit")]
    pub coefficient: f64,
    #[serde(default)]
    pub lambda: Option<usize>,
    /// `[slot, bit]` pairs.
    pub outcomes: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PauliTermSpec {
    #[serde(default = "unit")]
    pub coefficient: f64,
    pub pauli: String,
}

fn unit() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Builds the circuit and checks that every gate named by a noise rule occurs in it.
    pub fn build_circuit(&self) -> Result<Circuit> {
        let circuit = self.circuit.build()?;
        let compiled = CompiledCircuit::new(&circuit, self.twirl)?;
        for rule in &self.noise.rules {
            let Some(g) = &rule.gate else { continue };
            if g == "*" || g == "V" {
                continue;
            }
            let known = compiled.kinds().iter().any(|k| k.operation.label() == *g || k.operation.key() == *g);
            if !known {
                return Err(Error::Config(format!("noise rule refers to gate '{g}', which the circuit does not contain")));
            }
        }
        Ok(circuit)
    }
}

impl CircuitSpec {
    pub fn build(&self) -> Result<Circuit> {
        if let Some(name) = &self.builtin {
            if !self.slots.is_empty() {
                return Err(Error::Config("circuit: give either builtin or slots, not both".into()));
            }
            return match name.as_str() {
                "trotter" => trotter_circuit(self.steps.unwrap_or(8)),
                "spatial" => spatial_circuit(),
                other => Err(Error::Config(format!("unknown builtin circuit '{other}' (expected trotter or spatial)"))),
            };
        }
        let n = self.qubits.ok_or_else(|| Error::Config("circuit.qubits is required for an explicit circuit".into()))?;
        if self.slots.is_empty() {
            return Err(Error::Config("circuit has no slots".into()));
        }
        let mut circuit = Circuit::new(n);
        if let Some(w) = &self.lambda_weights {
            circuit.set_lambda_weights(w.clone())?;
        }
        for (i, s) in self.slots.iter().enumerate() {
            let at = |e: Error| Error::Config(format!("circuit.slots[{i}]: {e}"));
            let default = s.op.as_ref().map(OpSpec::build).transpose().map_err(at)?;
            let cases = s
                .cases
                .iter()
                .map(|c| {
                    Ok(Case {
                        lambda: c.lambda,
                        when: c
                            .when
                            .iter()
                            .map(|w| Condition { outcome: OutcomeRef { slot: w.slot, bit: w.bit }, value: w.value })
                            .collect(),
                        op: c.op.as_ref().map(OpSpec::build).transpose()?,
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map_err(at)?;
            if default.is_none() && cases.is_empty() {
                return Err(Error::Config(format!("circuit.slots[{i}]: needs op or cases")));
            }
            circuit.push_slot(Slot { cases, default, twirl: s.twirl })?;
        }
        match (self.observable.is_empty(), self.pauli_observable.is_empty()) {
            (false, true) => circuit.set_observable(Observable {
                terms: self
                    .observable
                    .iter()
                    .map(|t| ObservableTerm {
                        lambda: t.lambda,
                        coefficient: t.coefficient,
                        factors: t.outcomes.iter().map(|[slot, bit]| OutcomeRef { slot: *slot, bit: *bit }).collect(),
                    })
                    .collect(),
            })?,
            (true, false) => {
                let terms = self
                    .pauli_observable
                    .iter()
                    .map(|t| Ok((t.coefficient, t.pauli.parse::<PauliOperator>()?)))
                    .collect::<Result<Vec<_>>>()?;
                circuit.measure_pauli_sum(&terms)?;
            }
            (true, true) => return Err(Error::Config("circuit needs observable or pauli_observable".into())),
            (false, false) => return Err(Error::Config("circuit: give observable or pauli_observable, not both".into())),
        }
        if let Some(counts) = &self.declared_max_counts {
            circuit.set_declared_max_counts(counts.clone());
        }
        Ok(circuit)
    }
}

impl OpSpec {
    pub fn build(&self) -> Result<Operation> {
        let axis = || -> Result<HermitianAxis> {
            self.axis.as_deref().ok_or_else(|| Error::Config(format!("{} needs an axis", self.gate)))?.parse()
        };
        let q = |k: usize| -> Result<usize> {
            if self.qubits.len() != k {
                return Err(Error::Config(format!("{} takes {k} qubit(s), got {:?}", self.gate, self.qubits)));
            }
            Ok(self.qubits[0])
        };
        match self.gate.to_ascii_uppercase().as_str() {
            "H" => Ok(Operation::hadamard(q(1)?)),
            "S" => Ok(Operation::phase(q(1)?)),
            "T" => Ok(Operation::t(q(1)?)),
            "DELAY" => Ok(Operation::delay(q(1)?)),
            "CNOT" => {
                q(2)?;
                Operation::new(Gate::Cnot, self.qubits.clone())
            }
            "V" => Ok(Operation::reflection(axis()?, q(1)?)),
            "PREP" => Ok(Operation::prepare(axis()?, q(1)?)),
            "MEAS" => Ok(Operation::measure(axis()?, q(1)?)),
            "PAULI" => {
                let p: PauliOperator = self.pauli.as_deref().ok_or_else(|| Error::Config("PAULI needs a pauli string".into()))?.parse()?;
                Operation::pauli(p, self.qubits.clone())
            }
            "LAYER" => {
                let name = self.name.as_deref().ok_or_else(|| Error::Config("LAYER needs a name".into()))?;
                Operation::layer(name, self.ops.iter().map(OpSpec::build).collect::<Result<Vec<_>>>()?)
            }
            other => Err(Error::Config(format!("unknown gate '{other}'"))),
        }
    }
}
