use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use sni::circuit::{Circuit, Operation};
use sni::config::ExperimentConfig;
use sni::engine::{estimate_observed, MitigationSetup, RunSeed};
use sni::exec::Execution;
use sni::experiments::Session;
use sni::noise::{compose, depolarizing_channel, l1_pauli_norm, quasi_inverse, NoiseSpec, PauliChannel, SignedPauliMap};
use sni::pauli::{PauliOperator, SpacetimeError};
use sni::pec::{fit_from_samples, fit_sparse_model, run_cpec, SiteMap, SparseCounts, SparseModel};
use sni::sampler::SamplerChoice;
use sni::Error;

fn session(name: &str) -> Session {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    Session::new(ExperimentConfig::load(&path).unwrap(), Execution::default()).unwrap()
}

fn site_map(setup: &MitigationSetup) -> Arc<SiteMap> {
    Arc::new(SiteMap::new(setup.program.compiled(), setup.sampler.layout()).unwrap())
}

fn p(s: &str) -> PauliOperator {
    s.parse().unwrap()
}

/// Phase-free product weights `Σ_b a(b) c(b·x)` by enumeration.
fn product_matrix(c: &PauliChannel) -> DMatrix<f64> {
    let q = c.qubit_count();
    let all: Vec<PauliOperator> = PauliOperator::all(q).collect();
    let d = all.len();
    DMatrix::from_fn(d, d, |row, col| c.probability(&all[row].product(&all[col]).unwrap()))
}

/// Quasi-inverse weights from the linear system `C w = e_I`.
fn brute_force_inverse(c: &PauliChannel) -> Vec<f64> {
    let m = product_matrix(c);
    let mut e = DVector::zeros(m.nrows());
    e[0] = 1.0;
    m.lu().solve(&e).unwrap().iter().copied().collect()
}

#[test]
fn trivial_samples_fit_identity_channels() {
    let s = session("phase-flip.toml");
    let map = site_map(&s.setup);
    let samples = vec![SpacetimeError::trivial(s.setup.sampler.layout().clone()); 10];
    let model = fit_from_samples(&samples, map).unwrap();
    assert!(!model.channels.is_empty());
    for c in model.channels.values() {
        assert_eq!(c.error_rate(), 0.0);
    }
}

#[test]
fn counting_fit() {
    let s = session("phase-flip.toml");
    let map = site_map(&s.setup);
    let layout = s.setup.sampler.layout().clone();
    let compiled = s.setup.program.compiled();
    let pos = layout.entries().iter().position(|e| compiled.kinds()[e.kind].operation.label() == "H").unwrap();
    let samples: Vec<SpacetimeError> = ["X", "I", "I", "X"]
        .iter()
        .map(|letter| {
            let mut e = SpacetimeError::trivial(layout.clone());
            e.set_cell(pos, 0, p(letter));
            e
        })
        .collect();
    let model = fit_from_samples(&samples, map).unwrap();
    let h = &model.channels["H"];
    assert_eq!(h.probability(&p("I")), 0.5);
    assert_eq!(h.probability(&p("X")), 0.5);
    for (name, c) in &model.channels {
        if name != "H" {
            assert_eq!(c.error_rate(), 0.0, "{name}");
        }
    }
}

#[test]
fn empty_sample_set_is_an_estimation_error() {
    let s = session("phase-flip.toml");
    assert!(matches!(fit_from_samples(&[], site_map(&s.setup)), Err(Error::Estimation(_))));
}

#[test]
fn global_depolarizing_marginal() {
    let mut c = Circuit::new(4);
    c.push(Operation::layer("HHHH", (0..4).map(Operation::hadamard).collect()).unwrap()).unwrap();
    c.measure_pauli_sum(&[(1.0, p("XXXX"))]).unwrap();
    let setup = MitigationSetup::new(&c, &NoiseSpec::default(), SamplerChoice::Ideal, false).unwrap();
    let layout = setup.sampler.layout().clone();
    let pos = layout.entries().iter().position(|e| e.support.len() == 4).unwrap();
    let mut samples = Vec::new();
    for error in PauliOperator::all(4).skip(1) {
        let mut e = SpacetimeError::trivial(layout.clone());
        e.set_cell(pos, 0, error);
        samples.push(e);
    }
    let nontrivial = samples.len();
    samples.extend(std::iter::repeat_n(SpacetimeError::trivial(layout.clone()), 3 * nontrivial));
    let rate = nontrivial as f64 / samples.len() as f64;
    let model = fit_from_samples(&samples, site_map(&setup)).unwrap();

    // Marginal of the uniform global channel on qubit 0.
    let mut marginal = [0.0; 4];
    for error in PauliOperator::all(4).skip(1) {
        marginal[error.letter(0).code() as usize] += rate / nontrivial as f64;
    }
    marginal[0] += 1.0 - rate;
    let h = &model.channels["H"];
    for (code, expected) in marginal.iter().enumerate() {
        let letter = PauliOperator::from_index(1, code);
        assert!((h.probability(&letter) - expected).abs() < 1e-15, "{letter}");
    }
    let depolarizing = depolarizing_channel(1, 4.0 * marginal[1]).unwrap();
    assert!(h.distance(&depolarizing) < 1e-15);
}

#[test]
fn fitted_frequencies_converge_at_the_square_root_rate() {
    let s = session("phase-flip.toml");
    let map = site_map(&s.setup);
    let rms = |m_p: u64| {
        let reps = 12;
        let sq: f64 = (0..reps)
            .map(|rep| {
                let (_, _, counts) = estimate_observed(&s.setup.sampler, m_p, RunSeed::new(31, rep), Execution::default(), || {
                    SparseCounts::new(map.clone())
                })
                .unwrap();
                let model = fit_sparse_model(&counts).unwrap();
                (model.channels["H"].probability(&p("Z")) - 0.2).powi(2)
            })
            .sum();
        (sq / reps as f64).sqrt()
    };
    let ratio = rms(4000) / rms(16_000);
    assert!((1.3..3.0).contains(&ratio), "{ratio}");
}

#[test]
fn identity_inverse() {
    let id = PauliChannel::identity(vec![0]);
    let inv = quasi_inverse(&id).unwrap();
    assert_eq!(inv.terms().len(), 1);
    assert_eq!(inv.weight(&p("I")), 1.0);
}

#[test]
fn depolarizing_gamma_matches_brute_force() {
    for q in [1, 2] {
        for rate in [0.01, 0.1, 0.3] {
            let c = depolarizing_channel(q, rate).unwrap();
            let inv = quasi_inverse(&c).unwrap();
            let oracle = brute_force_inverse(&c);
            let gamma: f64 = oracle.iter().map(|w| w.abs()).sum();
            assert!((l1_pauli_norm(&inv) - gamma).abs() < 1e-10, "q={q} p={rate}");
            for (i, w) in oracle.iter().enumerate() {
                assert!((inv.weight(&PauliOperator::from_index(q, i)) - w).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn near_singular_channels_are_rejected() {
    let c = PauliChannel::new(vec![0], [(p("I"), 0.5), (p("X"), 0.5)]).unwrap();
    assert!(matches!(quasi_inverse(&c), Err(Error::Singular(_))));
}

#[test]
fn cpec_with_the_exact_model_is_unbiased() {
    let s = session("phase-flip.toml");
    let map = site_map(&s.setup);
    let mut channels = BTreeMap::new();
    for (name, q) in map.types() {
        let c = if name == "H" {
            PauliChannel::new(vec![0], [(p("I"), 0.8), (p("Z"), 0.2)]).unwrap()
        } else {
            PauliChannel::identity((0..*q).collect())
        };
        channels.insert(name.clone(), c);
    }
    let model = SparseModel { channels };
    let shots = 60_000;
    let r = run_cpec(&s.setup.program, &model, shots, RunSeed::new(5, 0), Execution::default()).unwrap();
    assert!((r.gamma - 1.0 / 0.6).abs() < 1e-12);
    assert!((r.estimate - s.ideal).abs() < 4.0 * r.gamma / (shots as f64).sqrt(), "{}", r.estimate);
}

#[test]
fn cpec_is_identical_across_execution_modes() {
    let s = session("phase-flip.toml");
    let map = site_map(&s.setup);
    let (_, _, counts) =
        estimate_observed(&s.setup.sampler, 4000, RunSeed::new(2, 0), Execution::default(), || SparseCounts::new(map.clone())).unwrap();
    let model = fit_sparse_model(&counts).unwrap();
    let run = RunSeed::new(2, 0);
    let a = run_cpec(&s.setup.program, &model, 5000, run, Execution::Parallel).unwrap();
    let b = run_cpec(&s.setup.program, &model, 5000, run, Execution::Sequential).unwrap();
    assert_eq!(a, b);
}

fn channel(q: usize) -> impl Strategy<Value = PauliChannel> {
    let d = 1usize << (2 * q);
    (0.55f64..1.0, prop::collection::vec(0.0f64..1.0, d - 1)).prop_map(move |(identity, rest)| {
        let total: f64 = rest.iter().sum::<f64>().max(1e-12);
        let mut dense = vec![identity];
        dense.extend(rest.iter().map(|w| w / total * (1.0 - identity)));
        PauliChannel::from_dense((0..q).collect(), dense).unwrap()
    })
}

fn signed(q: usize) -> impl Strategy<Value = SignedPauliMap> {
    prop::collection::vec(-1.0f64..1.0, 1usize << (2 * q)).prop_map(move |w| {
        SignedPauliMap::new((0..q).collect(), w.into_iter().enumerate().map(|(i, w)| (PauliOperator::from_index(q, i), w))).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn inverse_composes_to_identity_one_qubit(c in channel(1)) {
        let inv = quasi_inverse(&c).unwrap();
        let back = compose(&inv, &SignedPauliMap::from(&c)).unwrap();
        prop_assert!(back.distance(&SignedPauliMap::identity(vec![0])) < 1e-10);
    }

    #[test]
    fn inverse_composes_to_identity_two_qubits(c in channel(2)) {
        let inv = quasi_inverse(&c).unwrap();
        let back = compose(&inv, &SignedPauliMap::from(&c)).unwrap();
        prop_assert!(back.distance(&SignedPauliMap::identity(vec![0, 1])) < 1e-10);
    }

    #[test]
    fn inverse_gamma_is_at_least_one(c in channel(2)) {
        prop_assert!(l1_pauli_norm(&quasi_inverse(&c).unwrap()) >= 1.0 - 1e-12);
    }

    #[test]
    fn l1_norm_is_submultiplicative(a in signed(2), b in signed(2)) {
        let ab = compose(&a, &b).unwrap();
        prop_assert!(l1_pauli_norm(&ab) <= l1_pauli_norm(&a) * l1_pauli_norm(&b) + 1e-12);
    }
}
