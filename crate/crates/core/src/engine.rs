//! The SNI protocol driver: total-error-rate estimation, order sampling and
//! the error-mitigated estimator.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::circuit::{Circuit, CompiledCircuit};
use crate::error::{Error, Result};
use crate::exec::{map_chunks, reduce_pairwise, Execution};
use crate::noise::model::{NoiseSpec, NoiseTable};
use crate::pauli::SpacetimeError;
use crate::rng::{stream, Purpose, Stream};
use crate::sampler::{Cell, ErrorSampler, SamplerChoice, SamplerTally};
use crate::sim::{Executor, NativeNoise, Program};

/// Seed and repetition index addressing every random stream of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RunSeed {
    pub seed: u64,
    pub repetition: u32,
}

impl RunSeed {
    pub fn new(seed: u64, repetition: u32) -> Self {
        RunSeed { seed, repetition }
    }

    pub fn stream(&self, purpose: Purpose, index: u64) -> Stream {
        stream(self.seed, purpose, self.repetition, index)
    }
}

/// `P̂ = M_error / M_P`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateEstimate {
    pub p_hat: f64,
    pub m_p: u64,
    pub m_error: u64,
}

impl RateEstimate {
    pub fn from_counts(m_p: u64, m_error: u64) -> Result<Self> {
        if m_p == 0 || m_error > m_p {
            return Err(Error::Domain(format!("invalid rate counts {m_error}/{m_p}")));
        }
        Ok(RateEstimate { p_hat: m_error as f64 / m_p as f64, m_p, m_error })
    }
}

/// Receives every spacetime instance drawn during rate estimation.
pub trait InstanceObserver: Send + Sized {
    /// `cells` lists the nontrivial cells of one instance.
    fn observe(&mut self, cells: &[Cell]);
    fn merge(self, other: Self) -> Self;
}

impl InstanceObserver for () {
    fn observe(&mut self, _: &[Cell]) {}
    fn merge(self, _: Self) -> Self {}
}

/// Draws `m_p` spacetime instances and counts the nontrivial ones.
pub fn estimate_total_error_rate(sampler: &ErrorSampler, m_p: u64, run: RunSeed, exec: Execution) -> Result<(RateEstimate, SamplerTally)> {
    let (rate, tally, ()) = estimate_observed(sampler, m_p, run, exec, || ())?;
    Ok((rate, tally))
}

/// [`estimate_total_error_rate`], also feeding each instance to an observer made per chunk.
pub fn estimate_observed<O: InstanceObserver>(
    sampler: &ErrorSampler,
    m_p: u64,
    run: RunSeed,
    exec: Execution,
    make: impl Fn() -> O + Sync + Send,
) -> Result<(RateEstimate, SamplerTally, O)> {
    if m_p == 0 {
        return Err(Error::Domain("rate estimation needs M_P ≥ 1".into()));
    }
    let kinds = sampler.layout().entries().iter().map(|e| e.kind + 1).max().unwrap_or(0);
    let parts = map_chunks(m_p, exec, |range| {
        let mut rng = run.stream(Purpose::RateEstimation, range.start);
        let mut tally = SamplerTally::new(kinds);
        let mut observer = make();
        let mut cells = Vec::new();
        for _ in range {
            sampler.draw_instance(&mut rng, &mut tally, &mut cells);
            observer.observe(&cells);
        }
        (tally, observer)
    });
    let (tally, observer) = reduce_pairwise(parts, |(ta, oa), (tb, ob)| (ta.merge(tb), oa.merge(ob))).expect("at least one chunk");
    Ok((RateEstimate::from_counts(tally.instances, tally.nontrivial)?, tally, observer))
}

/// Longest cached prefix of the order CDF.
const ORDER_TABLE_MAX: usize = 4096;

/// `Pro(k) = (1 - 2P̂) P̂^k / (1 - P̂)^{k+1}`, sampled by inverse CDF.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderDistribution {
    p_hat: f64,
    ratio: f64,
    cdf: Vec<f64>,
}

impl OrderDistribution {
    pub fn new(p_hat: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&p_hat) {
            if p_hat >= 0.5 {
                return Err(Error::Protocol(format!("SNI requires P < 1/2, got P̂ = {p_hat}")));
            }
            return Err(Error::Domain(format!("total error rate {p_hat} is negative")));
        }
        let ratio = p_hat / (1.0 - p_hat);
        let mut cdf = Vec::new();
        let mut tail = 1.0;
        while cdf.len() < ORDER_TABLE_MAX {
            tail *= ratio;
            cdf.push(1.0 - tail);
            if tail < 1e-17 {
                break;
            }
        }
        Ok(OrderDistribution { p_hat, ratio, cdf })
    }

    pub fn p_hat(&self) -> f64 {
        self.p_hat
    }

    /// `γ = 1/(1 - 2P̂)`.
    pub fn gamma(&self) -> f64 {
        1.0 / (1.0 - 2.0 * self.p_hat)
    }

    pub fn pmf(&self, k: u32) -> f64 {
        (1.0 - 2.0 * self.p_hat) / (1.0 - self.p_hat) * self.ratio.powi(k as i32)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.gen();
        let k = self.cdf.partition_point(|&c| c <= u);
        if k < self.cdf.len() {
            return k as u32;
        }
        ((1.0 - u).ln() / self.ratio.ln()).floor().max(k as f64) as u32
    }
}

/// One draw of the order `k`.
pub fn sample_order<R: Rng + ?Sized>(p_hat: f64, rng: &mut R) -> Result<u32> {
    Ok(OrderDistribution::new(p_hat)?.sample(rng))
}

/// A circuit with its noise, executable program and error sampler.
#[derive(Clone, Debug)]
pub struct MitigationSetup {
    pub program: Arc<Program>,
    pub sampler: Arc<ErrorSampler>,
}

impl MitigationSetup {
    /// Compiles `circuit` (twirled when `twirl`) and binds `noise`.
    pub fn new(circuit: &Circuit, noise: &NoiseSpec, choice: SamplerChoice, twirl: bool) -> Result<Self> {
        if choice == SamplerChoice::Practical && !twirl {
            return Err(Error::Protocol("the practical sampler requires a twirled circuit".into()));
        }
        let compiled = Arc::new(CompiledCircuit::new(circuit, twirl)?);
        let table = Arc::new(NoiseTable::bind(noise, &compiled)?);
        let sampler = ErrorSampler::new(choice, &compiled, &table)?;
        let program = Program::new(compiled, Some(table))?;
        Ok(MitigationSetup { program: Arc::new(program), sampler: Arc::new(sampler) })
    }

    /// The exact total error rate of the sampler.
    pub fn exact_rate(&self) -> f64 {
        self.sampler.total_error_rate()
    }
}

/// Where `P̂` comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateSource {
    /// Rate estimation with `M_P` draws.
    Estimate { m_p: u64 },
    /// The sampler's exact total error rate.
    Exact,
    /// A given value.
    Injected(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MitigationOptions {
    pub shots: u64,
    pub execution: Execution,
    /// Also accumulate the likelihood-ratio estimate at this rate from the same shots.
    pub reference_rate: Option<f64>,
}

impl MitigationOptions {
    pub fn new(shots: u64) -> Self {
        MitigationOptions { shots, execution: Execution::default(), reference_rate: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MitigationResult {
    /// `Â_QEM = γ/M Σ η a`.
    pub estimate: f64,
    pub gamma: f64,
    pub p_hat: f64,
    /// Present when `P̂` was estimated.
    pub rate: Option<RateEstimate>,
    pub shots: u64,
    pub tally: SamplerTally,
    pub k_histogram: BTreeMap<u32, u64>,
    /// `Σ η a`.
    pub sign_sum: f64,
    /// `Σ a²`.
    pub square_sum: f64,
    /// Unbiased estimate at the reference rate `P` from the same shots,
    /// `γ_P/M Σ η a Pro_P(k)/Pro_P̂(k)`.
    pub reference: Option<f64>,
}

impl MitigationResult {
    /// `M_es`: instances drawn for estimation plus those drawn while mitigating.
    pub fn sampling_cost(&self) -> u64 {
        self.rate.map_or(0, |r| r.m_p) + self.tally.instances
    }

    /// Sample variance of the per-shot values `γ η a`.
    pub fn shot_variance(&self) -> f64 {
        let m = self.shots as f64;
        let mean = self.estimate;
        (self.gamma * self.gamma * self.square_sum / m - mean * mean) * m / (m - 1.0).max(1.0)
    }

    /// Standard error of the estimate.
    pub fn std_error(&self) -> f64 {
        (self.shot_variance() / self.shots as f64).sqrt()
    }
}

#[derive(Clone, Debug, Default)]
struct Partial {
    sign_sum: f64,
    square_sum: f64,
    reference_sum: f64,
    tally: SamplerTally,
    k_histogram: BTreeMap<u32, u64>,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        self.sign_sum += other.sign_sum;
        self.square_sum += other.square_sum;
        self.reference_sum += other.reference_sum;
        self.tally = self.tally.merge(other.tally);
        for (k, n) in other.k_histogram {
            *self.k_histogram.entry(k).or_default() += n;
        }
        self
    }
}

/// Resolves `P̂` from `source`.
pub fn resolve_rate(setup: &MitigationSetup, source: RateSource, run: RunSeed, exec: Execution) -> Result<(f64, Option<RateEstimate>)> {
    match source {
        RateSource::Estimate { m_p } => {
            let (rate, _) = estimate_total_error_rate(&setup.sampler, m_p, run, exec)?;
            Ok((rate.p_hat, Some(rate)))
        }
        RateSource::Exact => Ok((setup.exact_rate(), None)),
        RateSource::Injected(p) => Ok((p, None)),
    }
}

/// Runs `M` shots with processed errors of random order and returns the mitigated estimate.
pub fn mitigate(setup: &MitigationSetup, source: RateSource, options: &MitigationOptions, run: RunSeed) -> Result<MitigationResult> {
    let (p_hat, rate) = resolve_rate(setup, source, run, options.execution)?;
    mitigate_at(setup, p_hat, rate, options, run)
}

/// [`mitigate`] at a fixed `P̂`.
pub fn mitigate_at(
    setup: &MitigationSetup,
    p_hat: f64,
    rate: Option<RateEstimate>,
    options: &MitigationOptions,
    run: RunSeed,
) -> Result<MitigationResult> {
    if options.shots == 0 {
        return Err(Error::Domain("mitigation needs M ≥ 1 shots".into()));
    }
    let order = OrderDistribution::new(p_hat)?;
    let reference = options.reference_rate.map(OrderDistribution::new).transpose()?;
    let program = &*setup.program;
    let sampler = &*setup.sampler;
    let kinds = program.compiled().kinds().len();
    let parts = map_chunks(options.shots, options.execution, |range| -> Result<Partial> {
        let mut executor = Executor::new(program)?;
        let mut error = SpacetimeError::trivial(sampler.layout().clone());
        let mut scratch = Vec::new();
        let mut part = Partial { tally: SamplerTally::new(kinds), ..Partial::default() };
        for shot in range {
            let mut rng = run.stream(Purpose::Shot, shot);
            let k = order.sample(&mut rng);
            sampler.processed_sample(k, &mut rng, &mut part.tally, &mut error, &mut scratch)?;
            let a = executor.run(NativeNoise::Drawn, Some(&error), None, &mut rng)?.value;
            let eta = if k % 2 == 0 { 1.0 } else { -1.0 };
            part.sign_sum += eta * a;
            part.square_sum += a * a;
            if let Some(r) = &reference {
                part.reference_sum += eta * a * r.pmf(k) / order.pmf(k);
            }
            *part.k_histogram.entry(k).or_default() += 1;
        }
        Ok(part)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let total = reduce_pairwise(parts, Partial::merge).expect("at least one chunk");
    let m = options.shots as f64;
    let gamma = order.gamma();
    Ok(MitigationResult {
        estimate: gamma * total.sign_sum / m,
        gamma,
        p_hat,
        rate,
        shots: options.shots,
        tally: total.tally,
        k_histogram: total.k_histogram,
        sign_sum: total.sign_sum,
        square_sum: total.square_sum,
        reference: reference.map(|r| r.gamma() * total.reference_sum / m),
    })
}

/// Mean and spread of plain shot values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShotSummary {
    pub shots: u64,
    pub mean: f64,
    pub variance: f64,
}

impl ShotSummary {
    pub fn std_error(&self) -> f64 {
        (self.variance / self.shots as f64).sqrt()
    }
}

/// Plain Monte Carlo estimate of `⟨A⟩` under the native noise, without insertions.
pub fn unmitigated_run(program: &Program, shots: u64, run: RunSeed, exec: Execution) -> Result<ShotSummary> {
    if shots == 0 {
        return Err(Error::Domain("need at least one shot".into()));
    }
    let native = if program.noise().is_some() { NativeNoise::Drawn } else { NativeNoise::Off };
    let parts = map_chunks(shots, exec, |range| -> Result<(f64, f64)> {
        let mut executor = Executor::new(program)?;
        let (mut sum, mut sq) = (0.0, 0.0);
        for shot in range {
            let mut rng = run.stream(Purpose::UnmitigatedShot, shot);
            let a = executor.run(native, None, None, &mut rng)?.value;
            sum += a;
            sq += a * a;
        }
        Ok((sum, sq))
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let (sum, sq) = reduce_pairwise(parts, |a, b| (a.0 + b.0, a.1 + b.1)).expect("at least one chunk");
    let m = shots as f64;
    let mean = sum / m;
    Ok(ShotSummary { shots, mean, variance: (sq / m - mean * mean) * m / (m - 1.0).max(1.0) })
}

/// Sampling cost of `M` shots without running the circuit: orders and accepted instances only.
pub fn sampling_cost(sampler: &ErrorSampler, p_hat: f64, shots: u64, run: RunSeed, exec: Execution) -> Result<SamplerTally> {
    let order = OrderDistribution::new(p_hat)?;
    let kinds = sampler.layout().entries().iter().map(|e| e.kind + 1).max().unwrap_or(0);
    let parts = map_chunks(shots, exec, |range| -> Result<SamplerTally> {
        let mut rng = run.stream(Purpose::Cost, range.start);
        let mut tally = SamplerTally::new(kinds);
        let mut cells = Vec::new();
        for _ in range {
            for _ in 0..order.sample(&mut rng) {
                let mut attempts = 0u64;
                while !sampler.draw_accepted(&mut rng, &mut tally, &mut cells) {
                    attempts += 1;
                    if attempts == crate::sampler::REJECTION_CAP {
                        return Err(Error::NoNontrivialError(attempts));
                    }
                }
            }
        }
        Ok(tally)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(reduce_pairwise(parts, SamplerTally::merge).expect("at least one chunk"))
}
