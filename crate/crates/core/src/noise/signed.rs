use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::noise::channel::PauliChannel;
use crate::pauli::PauliOperator;

/// Fidelities below this value make a channel non-invertible.
pub const SINGULAR_FIDELITY: f64 = 1e-9;

/// A real-weighted (possibly negative) combination of Pauli conjugations.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedPauliMap {
    support: Vec<usize>,
    terms: BTreeMap<PauliOperator, f64>,
}

impl SignedPauliMap {
    pub fn new(support: Vec<usize>, terms: impl IntoIterator<Item = (PauliOperator, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (p, w) in terms {
            if p.qubit_count() != support.len() {
                return Err(Error::Dimension(format!("{}-qubit map term {p}", support.len())));
            }
            *map.entry(p).or_insert(0.0) += w;
        }
        Ok(SignedPauliMap { support, terms: map })
    }

    pub fn identity(support: Vec<usize>) -> Self {
        let q = support.len();
        SignedPauliMap { support, terms: BTreeMap::from([(PauliOperator::identity(q), 1.0)]) }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn terms(&self) -> &BTreeMap<PauliOperator, f64> {
        &self.terms
    }

    pub fn weight(&self, p: &PauliOperator) -> f64 {
        self.terms.get(p).copied().unwrap_or(0.0)
    }

    /// Weights indexed by `PauliOperator::index`.
    pub fn dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1usize << (2 * self.support.len())];
        for (p, w) in &self.terms {
            out[p.index()] += w;
        }
        out
    }

    /// The same map written on a larger support containing this one.
    pub fn embed(&self, support: &[usize]) -> Result<SignedPauliMap> {
        let positions = self
            .support
            .iter()
            .map(|q| support.iter().position(|s| s == q))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Dimension("embedding into a support that does not contain the map".into()))?;
        SignedPauliMap::new(support.to_vec(), self.terms.iter().map(|(p, w)| (p.embed(&positions, support.len()), *w)))
    }

    /// Largest absolute weight difference over all Paulis.
    pub fn distance(&self, other: &SignedPauliMap) -> f64 {
        let keys = self.terms.keys().chain(other.terms.keys());
        keys.map(|p| (self.weight(p) - other.weight(p)).abs()).fold(0.0, f64::max)
    }
}

impl From<&PauliChannel> for SignedPauliMap {
    fn from(c: &PauliChannel) -> Self {
        SignedPauliMap { support: c.support().to_vec(), terms: c.terms().iter().copied().collect() }
    }
}

/// `Σ |ν(τ)|`.
pub fn l1_pauli_norm(m: &SignedPauliMap) -> f64 {
    m.terms.values().map(|w| w.abs()).sum()
}

/// Composition of two maps, embedded into the union of their supports.
pub fn compose(a: &SignedPauliMap, b: &SignedPauliMap) -> Result<SignedPauliMap> {
    let mut support = a.support.clone();
    for q in &b.support {
        if !support.contains(q) {
            support.push(*q);
        }
    }
    let (a, b) = (a.embed(&support)?, b.embed(&support)?);
    let mut terms: BTreeMap<PauliOperator, f64> = BTreeMap::new();
    for (pa, wa) in &a.terms {
        for (pb, wb) in &b.terms {
            *terms.entry(*pa * *pb).or_insert(0.0) += wa * wb;
        }
    }
    Ok(SignedPauliMap { support, terms })
}

fn anticommute_sign(a: usize, b: usize, q: usize) -> f64 {
    let pa = PauliOperator::from_index(q, a);
    let pb = PauliOperator::from_index(q, b);
    if pa.commutes_with(&pb) {
        1.0
    } else {
        -1.0
    }
}

/// Pauli fidelities `f_σ = Σ_τ w_τ (-1)^{⟨σ,τ⟩}` of dense weights on `q` qubits.
pub fn fidelities(weights: &[f64], q: usize) -> Vec<f64> {
    let d2 = weights.len();
    (0..d2).map(|s| (0..d2).map(|t| weights[t] * anticommute_sign(s, t, q)).sum()).collect()
}

/// Inverse of [`fidelities`]: `w_τ = 4^{-q} Σ_σ f_σ (-1)^{⟨σ,τ⟩}`.
pub fn weights_from_fidelities(fids: &[f64], q: usize) -> Vec<f64> {
    let d2 = fids.len();
    (0..d2).map(|t| (0..d2).map(|s| fids[s] * anticommute_sign(s, t, q)).sum::<f64>() / d2 as f64).collect()
}

/// Signed map `m` with `compose(m, c) = [I]`, computed by inverting each Pauli fidelity.
pub fn quasi_inverse(c: &PauliChannel) -> Result<SignedPauliMap> {
    let q = c.qubit_count();
    let fids = fidelities(&c.dense(), q);
    if let Some((i, f)) = fids.iter().enumerate().find(|(_, f)| f.abs() < SINGULAR_FIDELITY) {
        return Err(Error::Singular(format!("fidelity {f} of {}", PauliOperator::from_index(q, i))));
    }
    let inverse: Vec<f64> = fids.iter().map(|f| 1.0 / f).collect();
    let weights = weights_from_fidelities(&inverse, q);
    SignedPauliMap::new(
        c.support().to_vec(),
        weights.into_iter().enumerate().filter(|(_, w)| *w != 0.0).map(|(i, w)| (PauliOperator::from_index(q, i), w)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::channel::depolarizing_channel;

    fn p(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    #[test]
    fn compose_bit_flips() {
        let c = SignedPauliMap::new(vec![0], [(p("I"), 0.9), (p("X"), 0.1)]).unwrap();
        let cc = compose(&c, &c).unwrap();
        assert!((cc.weight(&p("I")) - 0.82).abs() < 1e-15);
        assert!((cc.weight(&p("X")) - 0.18).abs() < 1e-15);
        assert_eq!(compose(&c, &SignedPauliMap::identity(vec![0])).unwrap(), c);
    }

    #[test]
    fn compose_embeds_disjoint_supports() {
        let a = SignedPauliMap::new(vec![0], [(p("X"), 1.0)]).unwrap();
        let b = SignedPauliMap::new(vec![2], [(p("Z"), 1.0)]).unwrap();
        let ab = compose(&a, &b).unwrap();
        assert_eq!(ab.support(), &[0, 2]);
        assert_eq!(ab.weight(&p("XZ")), 1.0);
    }

    #[test]
    fn inverse_of_bit_flip() {
        let c = PauliChannel::new(vec![0], [(p("I"), 0.9), (p("X"), 0.1)]).unwrap();
        let inv = quasi_inverse(&c).unwrap();
        assert!((inv.weight(&p("I")) - 1.125).abs() < 1e-12);
        assert!((inv.weight(&p("X")) + 0.125).abs() < 1e-12);
        assert!(inv.weight(&p("Z")).abs() < 1e-15);
        let back = compose(&inv, &SignedPauliMap::from(&c)).unwrap();
        assert!(back.distance(&SignedPauliMap::identity(vec![0])) < 1e-12);
    }

    #[test]
    fn depolarizing_inverse_cost() {
        for &rate in &[0.001, 0.01, 0.2] {
            let inv = quasi_inverse(&depolarizing_channel(1, rate).unwrap()).unwrap();
            assert!((l1_pauli_norm(&inv) - (1.0 + rate / 2.0) / (1.0 - rate)).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_channel() {
        let c = PauliChannel::new(vec![0], [(p("I"), 0.5), (p("X"), 0.5)]).unwrap();
        assert!(matches!(quasi_inverse(&c), Err(Error::Singular(_))));
    }

    #[test]
    fn fidelity_round_trip() {
        let w = depolarizing_channel(2, 0.3).unwrap().dense();
        let back = weights_from_fidelities(&fidelities(&w, 2), 2);
        assert!(w.iter().zip(back).all(|(a, b)| (a - b).abs() < 1e-14));
    }
}
