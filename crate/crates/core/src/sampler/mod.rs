//! Error samplers: ideal and practical single-operation samplers, the
//! spacetime error sampler and the processed error samplers.

pub mod bell;
pub mod decode;

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Geometric, WeightedAliasIndex};
use serde::{Deserialize, Serialize};

use crate::circuit::{CompiledCircuit, Role};
use crate::error::{Error, Result};
use crate::noise::model::NoiseTable;
use crate::noise::PauliChannel;
use crate::pauli::{PauliOperator, SpacetimeError, SpacetimeLayout};

pub use bell::{encode_decode_channel, practical_channel, MAX_SAMPLER_SUPPORT};
pub use decode::{decode_axis, decode_bell, decode_bell_pair};

/// Iterations of a rejection loop before giving up on drawing a nontrivial error.
pub const REJECTION_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerChoice {
    #[default]
    Ideal,
    Practical,
}

impl std::str::FromStr for SamplerChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(SamplerChoice::Ideal),
            "practical" => Ok(SamplerChoice::Practical),
            other => Err(Error::Config(format!("unknown sampler '{other}' (expected ideal or practical)"))),
        }
    }
}

/// Cost counters of a sampling run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SamplerTally {
    /// `M_es`: spacetime error instances drawn.
    pub instances: u64,
    pub nontrivial: u64,
    /// Single-operation draws per kind.
    pub kind_draws: Vec<u64>,
}

impl SamplerTally {
    pub fn new(kinds: usize) -> Self {
        SamplerTally { instances: 0, nontrivial: 0, kind_draws: vec![0; kinds] }
    }

    pub fn merge(mut self, other: SamplerTally) -> SamplerTally {
        self.instances += other.instances;
        self.nontrivial += other.nontrivial;
        if self.kind_draws.len() < other.kind_draws.len() {
            self.kind_draws.resize(other.kind_draws.len(), 0);
        }
        for (a, b) in self.kind_draws.iter_mut().zip(other.kind_draws) {
            *a += b;
        }
        self
    }
}

/// The Pauli channel each kind's sampler reports, in kind order.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveNoiseTable {
    pub kinds: Vec<PauliChannel>,
}

impl EffectiveNoiseTable {
    /// Pauli twirl of every kind's native noise.
    pub fn ideal(table: &NoiseTable, scenario: usize) -> Result<Self> {
        let kinds = table.scenario(scenario).kinds.iter().map(|k| k.native.twirled(&k.support)).collect::<Result<_>>()?;
        Ok(EffectiveNoiseTable { kinds })
    }

    /// Outcome distributions of the practical sampler circuits.
    pub fn practical(table: &NoiseTable, compiled: &CompiledCircuit, scenario: usize) -> Result<Self> {
        let kinds = compiled
            .kinds()
            .iter()
            .zip(&table.scenario(scenario).kinds)
            .map(|(info, noise)| practical_channel(&info.operation, noise))
            .collect::<Result<_>>()?;
        Ok(EffectiveNoiseTable { kinds })
    }
}

#[derive(Clone, Debug)]
struct KindTable {
    channel: PauliChannel,
    skip: Option<Geometric>,
}

impl KindTable {
    fn new(channel: PauliChannel) -> Result<Self> {
        let p = channel.error_rate();
        let skip = if p > 0.0 && p < 1.0 { Some(Geometric::new(p).map_err(|e| Error::Domain(e.to_string()))?) } else { None };
        Ok(KindTable { channel, skip })
    }

    /// Draws the nontrivial cells among `slots` i.i.d. draws.
    fn draw<R: Rng + ?Sized>(&self, pos: usize, slots: usize, rng: &mut R, out: &mut Vec<Cell>) {
        let p = self.channel.error_rate();
        if p == 0.0 || slots == 0 {
            return;
        }
        let mut next = 0u64;
        loop {
            if let Some(g) = &self.skip {
                next += g.sample(rng);
            }
            if next >= slots as u64 {
                return;
            }
            if let Some(e) = self.channel.sample_error(rng) {
                out.push(Cell { pos, slot: next as usize, pauli: e });
            }
            next += 1;
        }
    }
}

/// One nontrivial cell of a sparse spacetime error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub pos: usize,
    pub slot: usize,
    pub pauli: PauliOperator,
}

#[derive(Clone, Debug)]
struct Scenario {
    kinds: Vec<KindTable>,
    en_de: Vec<Option<KindTable>>,
    trivial: f64,
}

/// Samples spacetime errors of a compiled circuit from per-kind effective channels.
///
/// With several noise scenarios, each spacetime instance draws its scenario independently.
#[derive(Clone, Debug)]
pub struct ErrorSampler {
    choice: SamplerChoice,
    layout: Arc<SpacetimeLayout>,
    scenarios: Vec<Scenario>,
    weights: Vec<f64>,
    draw: Option<WeightedAliasIndex<f64>>,
    measurement: Vec<bool>,
    boost: f64,
}

impl ErrorSampler {
    /// Builds the ideal or practical sampler for `compiled` under `table`.
    pub fn new(choice: SamplerChoice, compiled: &CompiledCircuit, table: &NoiseTable) -> Result<Self> {
        let layout = Arc::new(table.layout(compiled));
        let mut scenarios = Vec::with_capacity(table.scenarios().len());
        for s in 0..table.scenarios().len() {
            let (effective, en_de) = match choice {
                SamplerChoice::Ideal => (EffectiveNoiseTable::ideal(table, s)?, Vec::new()),
                SamplerChoice::Practical => {
                    let en_de = table.scenario(s).kinds.iter().map(encode_decode_channel).collect::<Result<Vec<_>>>()?;
                    (EffectiveNoiseTable::practical(table, compiled, s)?, en_de)
                }
            };
            scenarios.push((table.scenario(s).weight, effective.kinds, en_de));
        }
        let measurement = compiled.kinds().iter().map(|k| k.operation.role() == Role::Measure).collect();
        Self::assemble(choice, layout, scenarios, measurement)
    }

    /// A sampler with explicitly given per-kind channels for every scenario.
    pub fn from_channels(layout: Arc<SpacetimeLayout>, scenarios: Vec<(f64, Vec<PauliChannel>)>) -> Result<Self> {
        let kinds = layout.entries().iter().map(|e| e.kind + 1).max().unwrap_or(0);
        let scenarios = scenarios.into_iter().map(|(w, c)| (w, c, Vec::new())).collect();
        Self::assemble(SamplerChoice::Ideal, layout, scenarios, vec![false; kinds])
    }

    fn assemble(
        choice: SamplerChoice,
        layout: Arc<SpacetimeLayout>,
        scenarios: Vec<(f64, Vec<PauliChannel>, Vec<Option<PauliChannel>>)>,
        measurement: Vec<bool>,
    ) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(Error::Config("sampler needs at least one scenario".into()));
        }
        let mut weights = Vec::new();
        let mut built = Vec::new();
        for (w, channels, en_de) in scenarios {
            for e in layout.entries() {
                let c = channels.get(e.kind).ok_or_else(|| Error::Config(format!("no channel assigned to kind {}", e.kind)))?;
                if c.qubit_count() != e.support.len() {
                    return Err(Error::Dimension(format!("channel for kind {} does not match its support", e.kind)));
                }
            }
            let trivial = layout.entries().iter().map(|e| (1.0 - channels[e.kind].error_rate()).powi(e.slots as i32)).product();
            weights.push(w);
            built.push(Scenario {
                kinds: channels.into_iter().map(KindTable::new).collect::<Result<_>>()?,
                en_de: en_de.into_iter().map(|c| c.map(KindTable::new).transpose()).collect::<Result<_>>()?,
                trivial,
            });
        }
        let total: f64 = weights.iter().sum();
        if total.is_nan() || total <= 0.0 || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::Config("scenario weights must be nonnegative with a positive sum".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        let draw =
            if built.len() > 1 { Some(WeightedAliasIndex::new(weights.clone()).map_err(|e| Error::Config(e.to_string()))?) } else { None };
        Ok(ErrorSampler { choice, layout, scenarios: built, weights, draw, measurement, boost: 0.0 })
    }

    /// Treats a trivial draw as nontrivial with probability `q` in every rejection test.
    pub fn with_boost(mut self, q: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::Domain(format!("boost probability {q} outside [0, 1)")));
        }
        self.boost = q;
        Ok(self)
    }

    pub fn choice(&self) -> SamplerChoice {
        self.choice
    }

    pub fn boost(&self) -> f64 {
        self.boost
    }

    pub fn layout(&self) -> &Arc<SpacetimeLayout> {
        &self.layout
    }

    pub fn scenario_count(&self) -> usize {
        self.scenarios.len()
    }

    /// Effective channel of a kind in a scenario.
    pub fn channel(&self, scenario: usize, kind: usize) -> &PauliChannel {
        &self.scenarios[scenario].kinds[kind].channel
    }

    /// Encode/decode channel inserted after a kind (practical sampler only).
    pub fn encode_decode(&self, scenario: usize, kind: usize) -> Option<&PauliChannel> {
        self.scenarios[scenario].en_de.get(kind).and_then(|c| c.as_ref()).map(|t| &t.channel)
    }

    /// Exact probability that a spacetime instance is nontrivial, including any boost.
    pub fn total_error_rate(&self) -> f64 {
        let p: f64 = self.scenarios.iter().zip(&self.weights).map(|(s, w)| w * (1.0 - s.trivial)).sum();
        p + self.boost * (1.0 - p)
    }

    fn draw_scenario<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.draw.as_ref().map_or(0, |d| d.sample(rng))
    }

    /// One error of a single operation of `kind`.
    pub fn error_sample<R: Rng + ?Sized>(&self, kind: usize, rng: &mut R) -> Result<PauliOperator> {
        let s = self.draw_scenario(rng);
        let table = self.scenarios[s].kinds.get(kind).ok_or_else(|| Error::Config(format!("no channel assigned to kind {kind}")))?;
        Ok(table.channel.sample(rng))
    }

    /// One spacetime instance as its nontrivial cells; returns whether it is nontrivial.
    pub fn draw_instance<R: Rng + ?Sized>(&self, rng: &mut R, tally: &mut SamplerTally, out: &mut Vec<Cell>) -> bool {
        out.clear();
        let scenario = &self.scenarios[self.draw_scenario(rng)];
        for (pos, e) in self.layout.entries().iter().enumerate() {
            scenario.kinds[e.kind].draw(pos, e.slots, rng, out);
            if let Some(d) = tally.kind_draws.get_mut(e.kind) {
                *d += e.slots as u64;
            }
        }
        tally.instances += 1;
        let nontrivial = !out.is_empty();
        if nontrivial {
            tally.nontrivial += 1;
        }
        nontrivial
    }

    /// Draws one instance and applies the rejection test, including the boost.
    pub fn draw_accepted<R: Rng + ?Sized>(&self, rng: &mut R, tally: &mut SamplerTally, out: &mut Vec<Cell>) -> bool {
        self.draw_instance(rng, tally, out) || (self.boost > 0.0 && rng.gen::<f64>() < self.boost)
    }

    /// A full spacetime error: one draw per cell.
    pub fn spacetime_sample<R: Rng + ?Sized>(&self, rng: &mut R, tally: &mut SamplerTally) -> SpacetimeError {
        let mut cells = Vec::new();
        self.draw_instance(rng, tally, &mut cells);
        let mut e = SpacetimeError::trivial(self.layout.clone());
        for c in cells {
            e.set_cell(c.pos, c.slot, c.pauli);
        }
        e
    }

    /// The processed error of order `k`, written into `out`.
    ///
    /// The practical sampler starts from an encode/decode insertion on every
    /// non-measurement cell; then `k` accepted instances are multiplied in.
    pub fn processed_sample<R: Rng + ?Sized>(
        &self,
        k: u32,
        rng: &mut R,
        tally: &mut SamplerTally,
        out: &mut SpacetimeError,
        scratch: &mut Vec<Cell>,
    ) -> Result<()> {
        out.clear();
        if self.choice == SamplerChoice::Practical {
            let scenario = &self.scenarios[self.draw_scenario(rng)];
            scratch.clear();
            for (pos, e) in self.layout.entries().iter().enumerate() {
                if self.measurement.get(e.kind).copied().unwrap_or(false) {
                    continue;
                }
                if let Some(Some(t)) = scenario.en_de.get(e.kind) {
                    t.draw(pos, e.slots, rng, scratch);
                }
            }
            multiply_cells(out, scratch);
        }
        for _ in 0..k {
            let mut attempts = 0u64;
            loop {
                if attempts == REJECTION_CAP {
                    return Err(Error::NoNontrivialError(REJECTION_CAP));
                }
                attempts += 1;
                if self.draw_accepted(rng, tally, scratch) {
                    multiply_cells(out, scratch);
                    break;
                }
            }
        }
        Ok(())
    }
}

fn multiply_cells(out: &mut SpacetimeError, cells: &[Cell]) {
    for c in cells {
        let v = out.cell(c.pos, c.slot) * c.pauli;
        out.set_cell(c.pos, c.slot, v);
    }
}
