//! Conventional PEC under a sparse, uncorrelated Pauli model fitted from spacetime error samples.
//!
//! Every non-Pauli primitive operation type (`T`, `H`, `CNOT`, `V`,
//! `PREP_X`, ...) gets one Pauli channel on its own qubits, shared by all
//! operations of that type.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand_distr::{Distribution, WeightedAliasIndex};

use crate::circuit::{CompiledCircuit, OpClass, PauliFrame};
use crate::engine::{InstanceObserver, MitigationResult, RunSeed};
use crate::error::{Error, Result};
use crate::exec::{map_chunks, reduce_pairwise, Execution};
use crate::noise::{l1_pauli_norm, quasi_inverse, PauliChannel, SignedPauliMap};
use crate::pauli::{PauliOperator, SpacetimeError, SpacetimeLayout};
use crate::rng::{Purpose, Stream};
use crate::sampler::{Cell, SamplerTally};
use crate::sim::{Corrector, Executor, NativeNoise, PrimitiveSite, Program};

/// Primitive operations of each layout position: `(type, positions within the kind's support)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteMap {
    types: Vec<(String, usize)>,
    sites: Vec<Vec<(usize, Vec<usize>)>>,
    observations: Vec<u64>,
}

impl SiteMap {
    pub fn new(compiled: &CompiledCircuit, layout: &SpacetimeLayout) -> Result<Self> {
        let mut types: Vec<(String, usize)> = Vec::new();
        let mut sites = Vec::new();
        for e in layout.entries() {
            let op = &compiled.kinds()[e.kind].operation;
            let mut list = Vec::new();
            for comp in op.components().iter().filter(|c| c.class() != OpClass::Pauli) {
                let label = comp.label();
                let q = comp.qubits().len();
                let ty = match types.iter().position(|(t, _)| *t == label) {
                    Some(i) if types[i].1 == q => i,
                    Some(_) => return Err(Error::Config(format!("operation type {label} appears with different arities"))),
                    None => {
                        types.push((label, q));
                        types.len() - 1
                    }
                };
                let positions = comp
                    .qubits()
                    .iter()
                    .map(|x| e.support.iter().position(|s| s == x))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| Error::Dimension(format!("kind {} support misses its qubits", e.kind)))?;
                list.push((ty, positions));
            }
            sites.push(list);
        }
        let mut observations = vec![0u64; types.len()];
        for (e, list) in layout.entries().iter().zip(&sites) {
            for (ty, _) in list {
                observations[*ty] += e.slots as u64;
            }
        }
        Ok(SiteMap { types, sites, observations })
    }

    /// Operation types with their arities.
    pub fn types(&self) -> &[(String, usize)] {
        &self.types
    }
}

/// Per-type Pauli counts accumulated from spacetime instances.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseCounts {
    map: Arc<SiteMap>,
    instances: u64,
    counts: Vec<Vec<u64>>,
}

impl SparseCounts {
    pub fn new(map: Arc<SiteMap>) -> Self {
        let counts = map.types.iter().map(|(_, q)| vec![0; 1usize << (2 * q)]).collect();
        SparseCounts { map, instances: 0, counts }
    }

    pub fn instances(&self) -> u64 {
        self.instances
    }

    /// Adds one instance given as its nontrivial cells.
    pub fn add_cells(&mut self, cells: &[Cell]) {
        self.instances += 1;
        for c in cells {
            for (ty, positions) in &self.map.sites[c.pos] {
                let local = c.pauli.restrict(positions);
                if !local.is_identity() {
                    self.counts[*ty][local.index()] += 1;
                }
            }
        }
    }

    pub fn add_sample(&mut self, sample: &SpacetimeError) {
        let mut cells = Vec::new();
        for (pos, e) in sample.layout().entries().iter().enumerate() {
            for slot in 0..e.slots {
                let pauli = sample.cell(pos, slot);
                if !pauli.is_identity() {
                    cells.push(Cell { pos, slot, pauli });
                }
            }
        }
        self.add_cells(&cells);
    }
}

impl InstanceObserver for SparseCounts {
    fn observe(&mut self, cells: &[Cell]) {
        self.add_cells(cells);
    }

    fn merge(mut self, other: Self) -> Self {
        self.instances += other.instances;
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self
    }
}

/// Operation type → Pauli channel on the type's own qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseModel {
    pub channels: BTreeMap<String, PauliChannel>,
}

/// Empirical per-type frequencies, pooled over all slots and operations of a type.
pub fn fit_sparse_model(counts: &SparseCounts) -> Result<SparseModel> {
    if counts.instances == 0 {
        return Err(Error::Estimation("cannot fit a sparse model from zero samples".into()));
    }
    let mut channels = BTreeMap::new();
    for (ty, (label, q)) in counts.map.types.iter().enumerate() {
        let total = (counts.instances * counts.map.observations[ty]) as f64;
        let mut dense: Vec<f64> = counts.counts[ty].iter().map(|&c| if total > 0.0 { c as f64 / total } else { 0.0 }).collect();
        dense[0] = (1.0 - dense[1..].iter().sum::<f64>()).max(0.0);
        channels.insert(label.clone(), PauliChannel::from_dense((0..*q).collect(), dense)?);
    }
    Ok(SparseModel { channels })
}

/// Fits from full spacetime samples.
pub fn fit_from_samples(samples: &[SpacetimeError], map: Arc<SiteMap>) -> Result<SparseModel> {
    let mut counts = SparseCounts::new(map);
    for s in samples {
        counts.add_sample(s);
    }
    fit_sparse_model(&counts)
}

#[derive(Clone, Debug)]
struct InverseTable {
    draw: WeightedAliasIndex<f64>,
    paulis: Vec<PauliOperator>,
    signs: Vec<f64>,
    gamma: f64,
}

impl InverseTable {
    fn new(map: &SignedPauliMap) -> Result<Self> {
        let (paulis, weights): (Vec<_>, Vec<_>) = map.terms().iter().map(|(p, w)| (*p, *w)).unzip();
        let draw = WeightedAliasIndex::new(weights.iter().map(|w| w.abs()).collect())
            .map_err(|e| Error::Singular(format!("quasi-inverse weights: {e}")))?;
        Ok(InverseTable { draw, paulis, signs: weights.iter().map(|w| w.signum()).collect(), gamma: l1_pauli_norm(map) })
    }
}

/// Quasi-probability tables for every primitive type of a program.
#[derive(Clone, Debug)]
pub struct PecTables {
    tables: Vec<Option<InverseTable>>,
}

impl PecTables {
    pub fn new(program: &Program, model: &SparseModel) -> Result<Self> {
        let tables = program
            .primitive_types()
            .iter()
            .map(|t| {
                let channel =
                    model.channels.get(t).ok_or_else(|| Error::Config(format!("sparse model has no entry for operation type {t}")))?;
                if channel.error_rate() == 0.0 {
                    return Ok(None);
                }
                InverseTable::new(&quasi_inverse(channel)?).map(Some)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PecTables { tables })
    }
}

/// Applies a sampled term of each operation's quasi-inverse and tracks the shot weight `Π γ_op sign`.
pub struct PecCorrector<'t> {
    tables: &'t PecTables,
    weight: f64,
    gamma: f64,
}

impl<'t> PecCorrector<'t> {
    pub fn new(tables: &'t PecTables) -> Self {
        PecCorrector { tables, weight: 1.0, gamma: 1.0 }
    }

    pub fn reset(&mut self) {
        self.weight = 1.0;
        self.gamma = 1.0;
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Corrector for PecCorrector<'_> {
    fn correct(&mut self, site: &PrimitiveSite, rng: &mut Stream) -> PauliFrame {
        let Some(t) = &self.tables.tables[site.ty] else { return PauliFrame::default() };
        let i = t.draw.sample(rng);
        self.weight *= t.gamma * t.signs[i];
        self.gamma *= t.gamma;
        PauliFrame::lift(&t.paulis[i], &site.qubits)
    }
}

/// Conventional PEC: per operation, a Pauli from its normalized `|quasi-inverse|`.
///
/// `gamma` reports the mean of the per-shot `Π γ_op`; `sign_sum` is `Σ w a / γ`
/// so that `estimate = γ/M · sign_sum`.
pub fn run_cpec(program: &Program, model: &SparseModel, shots: u64, run: RunSeed, exec: Execution) -> Result<MitigationResult> {
    if shots == 0 {
        return Err(Error::Domain("cPEC needs M ≥ 1 shots".into()));
    }
    let tables = PecTables::new(program, model)?;
    let parts = map_chunks(shots, exec, |range| -> Result<[f64; 3]> {
        let mut executor = Executor::new(program)?;
        let mut corrector = PecCorrector::new(&tables);
        let mut acc = [0.0; 3];
        for shot in range {
            let mut rng = run.stream(Purpose::PecShot, shot);
            corrector.reset();
            let a = executor.run(NativeNoise::Drawn, None, Some(&mut corrector), &mut rng)?.value;
            let w = corrector.weight();
            acc[0] += w * a;
            acc[1] += (w * a) * (w * a);
            acc[2] += corrector.gamma();
        }
        Ok(acc)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let [sum, sq, gammas] = reduce_pairwise(parts, |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]).expect("at least one chunk");
    let m = shots as f64;
    let gamma = gammas / m;
    Ok(MitigationResult {
        estimate: sum / m,
        gamma,
        p_hat: 0.0,
        rate: None,
        shots,
        tally: SamplerTally::default(),
        k_histogram: BTreeMap::new(),
        sign_sum: sum / gamma,
        square_sum: sq / (gamma * gamma),
        reference: None,
    })
}
