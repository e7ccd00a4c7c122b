//! Noise descriptions attached to operation kinds.
//!
//! A [`NoiseSpec`] is an ordered rule list; the first rule whose selector
//! matches an operation kind supplies its native noise. Parameters are
//! arithmetic expressions over named values, and a fluctuation spec turns the
//! model into a finite mixture of scenarios.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, WeightedAliasIndex};
use serde::{Deserialize, Serialize};

use crate::circuit::{CompiledCircuit, OpClass, Operation};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::noise::channel::{depolarizing_on, PauliChannel};
use crate::noise::process::{coherent_step, NoiseProcess, NoiseStep};
use crate::pauli::{LayoutEntry, PauliOperator, SpacetimeLayout};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub fluctuation: Option<Fluctuation>,
    #[serde(default)]
    pub rules: Vec<NoiseRule>,
    #[serde(default)]
    pub encode_decode: Option<EncodeDecode>,
}

/// A parameter drawn from a finite set for every circuit run and every error instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fluctuation {
    pub parameter: String,
    pub values: Vec<f64>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseRule {
    /// Gate label (`H`, `T`, `CNOT`, `V`, `PREP_X`, a layer name) or kind key (`CNOT[0,1]`); `*` matches all.
    #[serde(default)]
    pub gate: Option<String>,
    /// `stabilizer` or `non-stabilizer`.
    #[serde(default)]
    pub class: Option<String>,
    #[serde(default)]
    pub qubits: Option<Vec<usize>>,
    /// Where the channels act: `"operation"` (default), `"all"` or an explicit qubit list.
    #[serde(default)]
    pub support: SupportScope,
    pub channels: Vec<ChannelSpec>,
}

impl NoiseRule {
    /// A rule for every non-Pauli operation with the given channels on its own qubits.
    pub fn everywhere(channels: Vec<ChannelSpec>) -> Self {
        NoiseRule { gate: None, class: None, qubits: None, support: SupportScope::default(), channels }
    }

    pub fn for_gate(gate: &str, channels: Vec<ChannelSpec>) -> Self {
        NoiseRule { gate: Some(gate.to_string()), ..NoiseRule::everywhere(channels) }
    }

    fn matches(&self, op: &Operation) -> Result<bool> {
        if let Some(g) = &self.gate {
            if g != "*" && *g != op.label() && *g != op.key() {
                return Ok(false);
            }
        }
        if let Some(c) = &self.class {
            let class = match c.to_ascii_lowercase().as_str() {
                "stabilizer" => OpClass::Stabilizer,
                "non-stabilizer" | "nonstabilizer" => OpClass::NonStabilizer,
                other => return Err(Error::Config(format!("unknown operation class '{other}'"))),
            };
            if op.class() != class {
                return Ok(false);
            }
        }
        if let Some(qs) = &self.qubits {
            let mut a = qs.clone();
            let mut b = op.qubits().to_vec();
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SupportScope {
    #[default]
    #[serde(skip)]
    Operation,
    Named(String),
    Qubits(Vec<usize>),
}

impl SupportScope {
    fn resolve(&self, op: &Operation, n: usize) -> Result<Vec<usize>> {
        match self {
            SupportScope::Operation => Ok(op.qubits().to_vec()),
            SupportScope::Named(s) => match s.as_str() {
                "operation" => Ok(op.qubits().to_vec()),
                "all" => Ok((0..n).collect()),
                other => Err(Error::Config(format!("unknown noise support '{other}'"))),
            },
            SupportScope::Qubits(qs) => {
                if qs.is_empty() || qs.iter().any(|&q| q >= n) {
                    return Err(Error::Config(format!("noise support {qs:?} outside the register")));
                }
                Ok(qs.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelSpec {
    /// Depolarizing channel on the whole rule support.
    Depolarizing { p: Expr },
    /// `exp(-i θ/2 · axis)`; a one-letter axis is repeated on every support qubit.
    Coherent { axis: String, theta: Expr },
    /// Explicit Pauli probabilities; identity takes the remainder.
    Pauli { terms: BTreeMap<String, Expr> },
}

impl ChannelSpec {
    pub fn depolarizing(p: impl Into<Expr>) -> Self {
        ChannelSpec::Depolarizing { p: p.into() }
    }

    fn build(&self, support: &[usize], params: &BTreeMap<String, f64>) -> Result<NoiseStep> {
        match self {
            ChannelSpec::Depolarizing { p } => {
                let rate = p.evaluate(params)?;
                Ok(NoiseStep::Pauli(depolarizing_on(support.to_vec(), rate).map_err(config)?))
            }
            ChannelSpec::Coherent { axis, theta } => {
                let letters = if axis.len() == 1 { axis.repeat(support.len()) } else { axis.clone() };
                let axis: PauliOperator = letters.parse()?;
                if axis.qubit_count() != support.len() {
                    return Err(Error::Config(format!("rotation axis {axis} does not fit support {support:?}")));
                }
                coherent_step(theta.evaluate(params)?, &axis, support.to_vec()).map_err(config)
            }
            ChannelSpec::Pauli { terms } => {
                let mut parsed = Vec::new();
                let mut total = 0.0;
                for (s, e) in terms {
                    let p: PauliOperator = s.parse()?;
                    if p.qubit_count() != support.len() {
                        return Err(Error::Config(format!("Pauli term {p} does not fit support {support:?}")));
                    }
                    let w = e.evaluate(params)?;
                    if !p.is_identity() {
                        total += w;
                    }
                    parsed.push((p, w));
                }
                if !parsed.iter().any(|(p, _)| p.is_identity()) {
                    parsed.push((PauliOperator::identity(support.len()), 1.0 - total));
                }
                Ok(NoiseStep::Pauli(PauliChannel::new(support.to_vec(), parsed).map_err(config)?))
            }
        }
    }
}

fn config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// Depolarizing encode/decode noise of the practical sampler's super qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodeDecode {
    pub encode: Expr,
    pub decode: Expr,
    /// `"qubit"`: independent single-qubit channels; `"support"`: one channel on the noisy support.
    #[serde(default = "default_scope")]
    pub scope: String,
}

fn default_scope() -> String {
    "qubit".into()
}

impl EncodeDecode {
    fn build(&self, rate: &Expr, support: &[usize], params: &BTreeMap<String, f64>) -> Result<Option<PauliChannel>> {
        let p = rate.evaluate(params)?;
        let channel = match self.scope.as_str() {
            "support" => depolarizing_on(support.to_vec(), p).map_err(config)?,
            "qubit" => {
                let mut total = PauliChannel::identity(support.to_vec());
                for (k, _) in support.iter().enumerate() {
                    let single = depolarizing_on(vec![0], p).map_err(config)?;
                    let terms = single.terms().iter().map(|(t, w)| (t.embed(&[k], support.len()), *w));
                    total = total.then(&PauliChannel::new(support.to_vec(), terms)?)?;
                }
                total
            }
            other => return Err(Error::Config(format!("unknown encode_decode scope '{other}'"))),
        };
        Ok((channel.error_rate() > 0.0).then_some(channel))
    }
}

/// Noise of one operation kind in one scenario.
#[derive(Clone, Debug)]
pub struct KindNoise {
    /// Noisy support: operation qubits followed by any extra noise qubits, in ascending order.
    pub support: Vec<usize>,
    pub native: NoiseProcess,
    pub encode: Option<PauliChannel>,
    pub decode: Option<PauliChannel>,
}

impl KindNoise {
    pub fn noiseless(support: Vec<usize>) -> Self {
        KindNoise { support, native: NoiseProcess::none(), encode: None, decode: None }
    }
}

#[derive(Clone, Debug)]
pub struct NoiseScenario {
    pub weight: f64,
    pub params: BTreeMap<String, f64>,
    pub kinds: Vec<KindNoise>,
}

/// Native and encode/decode noise for every kind of a compiled circuit.
#[derive(Clone, Debug)]
pub struct NoiseTable {
    scenarios: Vec<NoiseScenario>,
    draw: Option<WeightedAliasIndex<f64>>,
}

impl NoiseTable {
    /// A single-scenario table.
    pub fn fixed(kinds: Vec<KindNoise>) -> Self {
        NoiseTable { scenarios: vec![NoiseScenario { weight: 1.0, params: BTreeMap::new(), kinds }], draw: None }
    }

    /// A mixture of scenarios; every scenario must assign the same supports.
    pub fn mixture(scenarios: Vec<NoiseScenario>) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(Error::Config("noise mixture needs at least one scenario".into()));
        }
        let first = &scenarios[0].kinds;
        for s in &scenarios {
            if s.kinds.len() != first.len() || s.kinds.iter().zip(first).any(|(a, b)| a.support != b.support) {
                return Err(Error::Config("noise scenarios disagree on supports".into()));
            }
        }
        let weights: Vec<f64> = scenarios.iter().map(|s| s.weight).collect();
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Config("scenario weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        let scenarios: Vec<NoiseScenario> = scenarios.into_iter().map(|s| NoiseScenario { weight: s.weight / total, ..s }).collect();
        let draw =
            if scenarios.len() > 1 { Some(WeightedAliasIndex::new(weights).map_err(|e| Error::Config(e.to_string()))?) } else { None };
        Ok(NoiseTable { scenarios, draw })
    }

    /// Evaluates `spec` for every kind of `circuit`.
    pub fn bind(spec: &NoiseSpec, circuit: &CompiledCircuit) -> Result<Self> {
        let n = circuit.circuit().qubit_count();
        let values: Vec<(f64, BTreeMap<String, f64>)> = match &spec.fluctuation {
            None => vec![(1.0, spec.params.clone())],
            Some(f) => {
                if f.values.is_empty() {
                    return Err(Error::Config("fluctuation needs at least one value".into()));
                }
                let weights = f.weights.clone().unwrap_or_else(|| vec![1.0; f.values.len()]);
                if weights.len() != f.values.len() {
                    return Err(Error::Config("fluctuation weights and values differ in length".into()));
                }
                f.values
                    .iter()
                    .zip(weights)
                    .map(|(v, w)| {
                        let mut params = spec.params.clone();
                        params.insert(f.parameter.clone(), *v);
                        (w, params)
                    })
                    .collect()
            }
        };
        let mut scenarios = Vec::with_capacity(values.len());
        for (weight, params) in values {
            let mut kinds = Vec::with_capacity(circuit.kinds().len());
            for kind in circuit.kinds() {
                kinds.push(kind_noise(spec, &kind.operation, n, &params).map_err(|e| {
                    Error::Config(format!("noise for kind '{}': {}", kind.key, e.to_string().trim_start_matches("configuration error: ")))
                })?);
            }
            scenarios.push(NoiseScenario { weight, params, kinds });
        }
        NoiseTable::mixture(scenarios)
    }

    pub fn scenarios(&self) -> &[NoiseScenario] {
        &self.scenarios
    }

    pub fn scenario(&self, i: usize) -> &NoiseScenario {
        &self.scenarios[i]
    }

    pub fn kind_count(&self) -> usize {
        self.scenarios[0].kinds.len()
    }

    pub fn support(&self, kind: usize) -> &[usize] {
        &self.scenarios[0].kinds[kind].support
    }

    /// Draws a scenario index with the scenario weights.
    pub fn draw_scenario<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.draw {
            Some(d) => d.sample(rng),
            None => 0,
        }
    }

    /// The spacetime layout `(kind, N_α^max, noisy support)` for `circuit`.
    pub fn layout(&self, circuit: &CompiledCircuit) -> SpacetimeLayout {
        let entries = circuit
            .counts()
            .iter()
            .enumerate()
            .map(|(kind, &slots)| LayoutEntry { kind, slots, support: self.support(kind).to_vec() })
            .collect();
        SpacetimeLayout::new(entries)
    }

    /// Whether any scenario carries encode/decode noise.
    pub fn has_encode_decode(&self) -> bool {
        self.scenarios.iter().any(|s| s.kinds.iter().any(|k| k.encode.is_some() || k.decode.is_some()))
    }
}

fn kind_noise(spec: &NoiseSpec, op: &Operation, n: usize, params: &BTreeMap<String, f64>) -> Result<KindNoise> {
    let mut support = op.qubits().to_vec();
    let mut steps = Vec::new();
    let mut placed = Vec::new();
    for rule in &spec.rules {
        if rule.matches(op)? {
            let rule_support = rule.support.resolve(op, n)?;
            for &q in &rule_support {
                if !support.contains(&q) {
                    support.push(q);
                }
            }
            for ch in &rule.channels {
                placed.push((ch, rule_support.clone()));
            }
            break;
        }
    }
    support.sort_unstable();
    for (ch, s) in placed {
        steps.push(ch.build(&s, params)?);
    }
    let (encode, decode) = match &spec.encode_decode {
        Some(ed) => (ed.build(&ed.encode, &support, params)?, ed.build(&ed.decode, &support, params)?),
        None => (None, None),
    };
    Ok(KindNoise { support, native: NoiseProcess::new(steps), encode, decode })
}
