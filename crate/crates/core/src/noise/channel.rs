use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, WeightedAliasIndex};

use crate::error::{Error, Result};
use crate::pauli::PauliOperator;

/// Tolerance on the probability sum of a freshly built channel.
pub const SUM_TOLERANCE: f64 = 1e-12;
/// Larger deviations up to this bound are renormalized away; beyond it the input is rejected.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-9;

/// Structural shape of a channel, used by the simulator to pick a fast path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelShape {
    /// `(1 - p) ρ + p Tr_S(ρ) ⊗ I/2^q` on the support.
    Depolarizing(f64),
    General,
}

/// A probability mixture of Pauli conjugations on a fixed qubit support.
#[derive(Clone)]
pub struct PauliChannel {
    support: Vec<usize>,
    terms: Vec<(PauliOperator, f64)>,
    error_rate: f64,
    shape: ChannelShape,
    draw: Option<WeightedAliasIndex<f64>>,
    error_terms: Vec<PauliOperator>,
    error_draw: Option<WeightedAliasIndex<f64>>,
}

impl PauliChannel {
    /// Builds a channel from `(Pauli, probability)` pairs; duplicates are summed.
    pub fn new(support: Vec<usize>, terms: impl IntoIterator<Item = (PauliOperator, f64)>) -> Result<Self> {
        let q = support.len();
        let mut dense = vec![0.0; 1usize << (2 * q)];
        for (p, w) in terms {
            if p.qubit_count() != q {
                return Err(Error::Dimension(format!("{q}-qubit channel term {p}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Domain(format!("probability {w} for {p}")));
            }
            dense[p.index()] += w;
        }
        Self::from_dense(support, dense)
    }

    /// Builds a channel from probabilities indexed by `PauliOperator::index`.
    pub fn from_dense(support: Vec<usize>, mut dense: Vec<f64>) -> Result<Self> {
        let q = support.len();
        if dense.len() != 1usize << (2 * q) {
            return Err(Error::Dimension(format!("{} probabilities for {q} qubits", dense.len())));
        }
        if let Some(w) = dense.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::Domain(format!("invalid probability {w}")));
        }
        let sum: f64 = dense.iter().sum();
        if (sum - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(Error::Domain(format!("channel probabilities sum to {sum}")));
        }
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            dense.iter_mut().for_each(|w| *w /= sum);
        }
        let terms: Vec<(PauliOperator, f64)> =
            dense.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(i, &w)| (PauliOperator::from_index(q, i), w)).collect();
        let error_rate = (1.0 - dense[0]).clamp(0.0, 1.0);
        let shape = depolarizing_shape(&dense);
        Ok(Self::assemble(support, terms, error_rate, shape))
    }

    fn assemble(support: Vec<usize>, terms: Vec<(PauliOperator, f64)>, error_rate: f64, shape: ChannelShape) -> Self {
        let draw = WeightedAliasIndex::new(terms.iter().map(|t| t.1).collect()).ok();
        let errors: Vec<_> = terms.iter().filter(|t| !t.0.is_identity()).copied().collect();
        let error_terms = errors.iter().map(|t| t.0).collect();
        let error_draw = WeightedAliasIndex::new(errors.iter().map(|t| t.1).collect()).ok();
        PauliChannel { support, terms, error_rate, shape, draw, error_terms, error_draw }
    }

    /// The error-free channel on `support`.
    pub fn identity(support: Vec<usize>) -> Self {
        let q = support.len();
        Self::assemble(support, vec![(PauliOperator::identity(q), 1.0)], 0.0, ChannelShape::Depolarizing(0.0))
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn qubit_count(&self) -> usize {
        self.support.len()
    }

    /// Nonzero terms in Pauli order.
    pub fn terms(&self) -> &[(PauliOperator, f64)] {
        &self.terms
    }

    pub fn probability(&self, p: &PauliOperator) -> f64 {
        self.terms.iter().find(|t| t.0 == *p).map_or(0.0, |t| t.1)
    }

    /// Probabilities indexed by `PauliOperator::index`.
    pub fn dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1usize << (2 * self.qubit_count())];
        for (p, w) in &self.terms {
            out[p.index()] = *w;
        }
        out
    }

    /// Total error rate `1 - Pr(identity)`.
    pub fn error_rate(&self) -> f64 {
        self.error_rate
    }

    pub fn shape(&self) -> ChannelShape {
        self.shape
    }

    /// Same channel on a different (equally sized) support.
    pub fn with_support(mut self, support: Vec<usize>) -> Result<Self> {
        if support.len() != self.support.len() {
            return Err(Error::Dimension("support size changed".into()));
        }
        self.support = support;
        Ok(self)
    }

    /// Draws a Pauli distributed as the channel.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PauliOperator {
        match &self.draw {
            Some(d) if self.terms.len() > 1 => self.terms[d.sample(rng)].0,
            _ => self.terms[0].0,
        }
    }

    /// Draws a Pauli conditioned on it being nontrivial.
    pub fn sample_error<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<PauliOperator> {
        match (&self.error_draw, self.error_terms.len()) {
            (_, 0) => None,
            (_, 1) => Some(self.error_terms[0]),
            (Some(d), _) => Some(self.error_terms[d.sample(rng)]),
            (None, _) => None,
        }
    }

    /// Channel composition: apply `self`, then `other` (both on the same support).
    pub fn then(&self, other: &PauliChannel) -> Result<PauliChannel> {
        if self.support != other.support {
            return Err(Error::Dimension("composing channels on different supports".into()));
        }
        let mut dense = vec![0.0; 1usize << (2 * self.qubit_count())];
        for (a, wa) in &self.terms {
            for (b, wb) in &other.terms {
                dense[(*a * *b).index()] += wa * wb;
            }
        }
        PauliChannel::from_dense(self.support.clone(), dense)
    }

    /// Marginal channel on the listed support positions.
    pub fn marginal(&self, positions: &[usize]) -> Result<PauliChannel> {
        let support = positions.iter().map(|&k| self.support[k]).collect();
        PauliChannel::new(support, self.terms.iter().map(|(p, w)| (p.restrict(positions), *w)))
    }

    /// Max-norm distance between probability vectors.
    pub fn distance(&self, other: &PauliChannel) -> f64 {
        self.dense().iter().zip(other.dense()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

fn depolarizing_shape(dense: &[f64]) -> ChannelShape {
    let Some(&rest) = dense.get(1) else {
        return ChannelShape::Depolarizing(0.0);
    };
    let uniform = dense[1..].iter().all(|w| (w - rest).abs() <= 1e-15 * rest.max(1e-300));
    if uniform {
        ChannelShape::Depolarizing(rest * dense.len() as f64)
    } else {
        ChannelShape::General
    }
}

impl PartialEq for PauliChannel {
    fn eq(&self, other: &Self) -> bool {
        self.support == other.support && self.terms == other.terms
    }
}

impl fmt::Debug for PauliChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PauliChannel").field("support", &self.support).field("terms", &self.terms).finish()
    }
}

/// `q`-qubit depolarizing channel: identity weight `1 - (4^q - 1) p / 4^q`, every other Pauli `p / 4^q`.
pub fn depolarizing_channel(q: usize, p: f64) -> Result<PauliChannel> {
    depolarizing_on((0..q).collect(), p)
}

/// Depolarizing channel on an explicit support.
pub fn depolarizing_on(support: Vec<usize>, p: f64) -> Result<PauliChannel> {
    let q = support.len();
    if q == 0 {
        return Err(Error::Domain("depolarizing channel needs at least one qubit".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("depolarizing rate {p} outside [0, 1]")));
    }
    let d2 = (1usize << (2 * q)) as f64;
    let mut dense = vec![p / d2; 1usize << (2 * q)];
    dense[0] = 1.0 - (d2 - 1.0) * p / d2;
    let terms = dense.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(i, &w)| (PauliOperator::from_index(q, i), w)).collect();
    Ok(PauliChannel::assemble(support, terms, (d2 - 1.0) * p / d2, ChannelShape::Depolarizing(p)))
}

/// Splits a channel as `(1 - P) [I] + P E`, returning `(P, E)`.
pub fn split_channel(c: &PauliChannel) -> Result<(f64, PauliChannel)> {
    let rate = c.error_rate();
    if rate <= 0.0 {
        return Err(Error::TrivialChannel);
    }
    let mass: f64 = c.terms().iter().filter(|t| !t.0.is_identity()).map(|t| t.1).sum();
    let errors = c.terms().iter().filter(|t| !t.0.is_identity()).map(|(p, w)| (*p, w / mass));
    Ok((rate, PauliChannel::new(c.support().to_vec(), errors)?))
}
