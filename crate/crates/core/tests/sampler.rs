mod common;

use std::sync::Arc;

use common::{flip_probability, gate_oracle, superop_on};
use sni::circuit::{Circuit, CompiledCircuit, HermitianAxis, Operation};
use sni::noise::model::{ChannelSpec, EncodeDecode, KindNoise, NoiseRule, NoiseSpec, NoiseTable, SupportScope};
use sni::noise::PauliChannel;
use sni::pauli::{LayoutEntry, Letter, PauliOperator, SpacetimeError, SpacetimeLayout};
use sni::rng::{stream, Purpose};
use sni::sampler::{decode_axis, decode_bell, decode_bell_pair, practical_channel, ErrorSampler, SamplerChoice, SamplerTally};

fn pauli(s: &str) -> PauliOperator {
    s.parse().unwrap()
}

fn bind(circuit: &Circuit, spec: &NoiseSpec) -> (CompiledCircuit, NoiseTable) {
    let compiled = CompiledCircuit::new(circuit, false).unwrap();
    let table = NoiseTable::bind(spec, &compiled).unwrap();
    (compiled, table)
}

fn kind_of<'a>(compiled: &CompiledCircuit, table: &'a NoiseTable, key: &str) -> (Operation, &'a KindNoise) {
    let k = compiled.kind_by_key(key).unwrap();
    (compiled.kinds()[k].operation.clone(), &table.scenario(0).kinds[k])
}

#[test]
fn single_qubit_table() {
    assert_eq!(decode_bell(1, 1), Letter::I);
    assert_eq!(decode_bell(1, -1), Letter::X);
    assert_eq!(decode_bell(-1, 1), Letter::Z);
    assert_eq!(decode_bell(-1, -1), Letter::Y);
}

#[test]
fn two_qubit_table() {
    let rows: [([i8; 4], &str); 16] = [
        ([1, 1, 1, 1], "II"),
        ([1, 1, 1, -1], "IX"),
        ([1, 1, -1, 1], "IZ"),
        ([1, 1, -1, -1], "IY"),
        ([1, -1, 1, 1], "XI"),
        ([1, -1, 1, -1], "XX"),
        ([1, -1, -1, 1], "XZ"),
        ([1, -1, -1, -1], "XY"),
        ([-1, 1, 1, 1], "ZI"),
        ([-1, 1, 1, -1], "ZX"),
        ([-1, 1, -1, 1], "ZZ"),
        ([-1, 1, -1, -1], "ZY"),
        ([-1, -1, 1, 1], "YI"),
        ([-1, -1, 1, -1], "YX"),
        ([-1, -1, -1, 1], "YZ"),
        ([-1, -1, -1, -1], "YY"),
    ];
    for (outcome, error) in rows {
        assert_eq!(decode_bell_pair(outcome), pauli(error), "{outcome:?}");
    }
}

#[test]
fn preparation_and_measurement_table() {
    let rows = [
        (HermitianAxis::new(0, 0, 1).unwrap(), Letter::X),
        (HermitianAxis::new(1, 0, 0).unwrap(), Letter::Z),
        (HermitianAxis::new(1, 1, 0).unwrap(), Letter::Z),
        (HermitianAxis::new(1, 0, 1).unwrap(), Letter::Y),
        (HermitianAxis::new(0, 1, 1).unwrap(), Letter::X),
    ];
    for (axis, error) in rows {
        assert_eq!(decode_axis(&axis, 1).unwrap(), Letter::I);
        assert_eq!(decode_axis(&axis, -1).unwrap(), error);
    }
    assert!(decode_axis(&rows[0].0, 0).is_err());
}

fn en_de(scope: &str) -> Option<EncodeDecode> {
    Some(EncodeDecode { encode: 0.01.into(), decode: 0.02.into(), scope: scope.into() })
}

#[test]
fn injected_single_qubit_error_is_reported() {
    let mut c = Circuit::new(1);
    c.push(Operation::hadamard(0)).unwrap();
    let spec = NoiseSpec {
        rules: vec![NoiseRule::everywhere(vec![ChannelSpec::Pauli { terms: [("X".to_string(), 1.0.into())].into() }])],
        ..NoiseSpec::default()
    };
    let (compiled, table) = bind(&c, &spec);
    let (op, noise) = kind_of(&compiled, &table, "H[0]");
    let channel = practical_channel(&op, noise).unwrap();
    assert!((channel.probability(&pauli("X")) - 1.0).abs() < 1e-12);
}

#[test]
fn injected_two_qubit_error_is_reported() {
    let mut c = Circuit::new(2);
    c.push(Operation::cnot(0, 1)).unwrap();
    let spec = NoiseSpec {
        rules: vec![NoiseRule::everywhere(vec![ChannelSpec::Pauli { terms: [("ZX".to_string(), 1.0.into())].into() }])],
        ..NoiseSpec::default()
    };
    let (compiled, table) = bind(&c, &spec);
    let (op, noise) = kind_of(&compiled, &table, "CNOT[0,1]");
    let channel = practical_channel(&op, noise).unwrap();
    assert!((channel.probability(&pauli("ZX")) - 1.0).abs() < 1e-12);
}

#[test]
fn injected_preparation_error_is_reported() {
    let a = HermitianAxis::new(1, 1, 0).unwrap();
    let mut c = Circuit::new(1);
    c.push(Operation::prepare(a, 0)).unwrap();
    let spec = NoiseSpec {
        rules: vec![NoiseRule::everywhere(vec![ChannelSpec::Pauli { terms: [("Z".to_string(), 1.0.into())].into() }])],
        ..NoiseSpec::default()
    };
    let (compiled, table) = bind(&c, &spec);
    let (op, noise) = kind_of(&compiled, &table, "PREP_X+Y[0]");
    let channel = practical_channel(&op, noise).unwrap();
    assert!((channel.probability(&pauli("Z")) - 1.0).abs() < 1e-12);
}

fn check_gate(circuit: Circuit, key: &str, channels: Vec<ChannelSpec>, scope: &str) {
    let spec = NoiseSpec { rules: vec![NoiseRule::everywhere(channels)], encode_decode: en_de(scope), ..NoiseSpec::default() };
    let (compiled, table) = bind(&circuit, &spec);
    let (op, noise) = kind_of(&compiled, &table, key);
    let got = practical_channel(&op, noise).unwrap();
    let want = gate_oracle(&op, noise);
    assert!(got.distance(&want) < 1e-10, "{key}: {got:?} vs {want:?}");
}

#[test]
fn hadamard_with_coherent_noise_matches_the_effective_channel() {
    let mut c = Circuit::new(1);
    c.push(Operation::hadamard(0)).unwrap();
    check_gate(c, "H[0]", vec![ChannelSpec::depolarizing(0.03), ChannelSpec::Coherent { axis: "X".into(), theta: 0.4.into() }], "qubit");
}

#[test]
fn t_gate_with_coherent_noise_matches_the_effective_channel() {
    let mut c = Circuit::new(1);
    c.push(Operation::t(0)).unwrap();
    check_gate(c, "T[0]", vec![ChannelSpec::Coherent { axis: "Y".into(), theta: 0.3.into() }, ChannelSpec::depolarizing(0.02)], "qubit");
}

#[test]
fn cnot_with_correlated_noise_matches_the_effective_channel() {
    let mut c = Circuit::new(2);
    c.push(Operation::cnot(1, 0)).unwrap();
    check_gate(
        c,
        "CNOT[1,0]",
        vec![ChannelSpec::depolarizing(0.04), ChannelSpec::Coherent { axis: "ZX".into(), theta: 0.25.into() }],
        "qubit",
    );
}

#[test]
fn four_qubit_layer_matches_the_effective_channel() {
    let layer = Operation::layer("L", vec![Operation::t(0), Operation::hadamard(1), Operation::cnot(2, 3)]).unwrap();
    let mut c = Circuit::new(4);
    c.push(layer).unwrap();
    check_gate(c, "L", vec![ChannelSpec::depolarizing(0.05), ChannelSpec::Coherent { axis: "Z".into(), theta: 0.1.into() }], "support");
}

#[test]
fn spectator_qubits_are_benchmarked_jointly() {
    let mut c = Circuit::new(3);
    c.push(Operation::hadamard(1)).unwrap();
    let spec = NoiseSpec {
        rules: vec![NoiseRule {
            support: SupportScope::Named("all".into()),
            ..NoiseRule::everywhere(vec![ChannelSpec::depolarizing(0.06)])
        }],
        encode_decode: en_de("qubit"),
        ..NoiseSpec::default()
    };
    let (compiled, table) = bind(&c, &spec);
    let (op, noise) = kind_of(&compiled, &table, "H[1]");
    assert_eq!(noise.support, vec![0, 1, 2]);
    let got = practical_channel(&op, noise).unwrap();
    assert!(got.distance(&gate_oracle(&op, noise)) < 1e-10);
}

#[test]
fn preparation_flip_rate_matches_the_effective_channel() {
    for axis in [HermitianAxis::new(1, 0, 0).unwrap(), HermitianAxis::new(0, 1, 1).unwrap()] {
        let mut c = Circuit::new(1);
        c.push(Operation::prepare(axis, 0)).unwrap();
        let spec = NoiseSpec {
            rules: vec![NoiseRule::everywhere(vec![
                ChannelSpec::Pauli { terms: [("Z".to_string(), 0.05.into()), ("Y".to_string(), 0.02.into())].into() },
                ChannelSpec::Coherent { axis: "X".into(), theta: 0.2.into() },
            ])],
            encode_decode: en_de("qubit"),
            ..NoiseSpec::default()
        };
        let (compiled, table) = bind(&c, &spec);
        let key = compiled.kinds()[0].key.clone();
        let (op, noise) = kind_of(&compiled, &table, &key);
        let got = practical_channel(&op, noise).unwrap();
        let map = noise.native.superoperator(&[0]).unwrap().then(&superop_on(&noise.encode, &[0])).unwrap();
        let e = PauliOperator::single(1, 0, axis.anticommuting_error());
        assert!((got.probability(&e) - flip_probability(&axis, &map)).abs() < 1e-10, "{axis:?}");
        assert!((got.error_rate() - got.probability(&e)).abs() < 1e-12);
    }
}

#[test]
fn measurement_flip_rate_matches_the_effective_channel() {
    let axis = HermitianAxis::new(0, 0, 1).unwrap();
    let mut c = Circuit::new(1);
    c.push(Operation::measure(axis, 0)).unwrap();
    let spec = NoiseSpec {
        rules: vec![NoiseRule::everywhere(vec![ChannelSpec::depolarizing(0.09)])],
        encode_decode: en_de("qubit"),
        ..NoiseSpec::default()
    };
    let (compiled, table) = bind(&c, &spec);
    let (op, noise) = kind_of(&compiled, &table, "MEAS_Z[0]");
    let got = practical_channel(&op, noise).unwrap();
    let map = superop_on(&noise.decode, &[0]).then(&noise.native.superoperator(&[0]).unwrap()).unwrap();
    assert!((got.probability(&pauli("X")) - flip_probability(&axis, &map)).abs() < 1e-10);
    assert!((got.probability(&pauli("X")) - (0.045 + 0.01 - 2.0 * 0.045 * 0.01)).abs() < 1e-12);
}

fn single_slot(channel: PauliChannel, slots: usize) -> ErrorSampler {
    let layout = Arc::new(SpacetimeLayout::new(vec![LayoutEntry { kind: 0, slots, support: vec![0] }]));
    ErrorSampler::from_channels(layout, vec![(1.0, vec![channel])]).unwrap()
}

fn four_sigma(p: f64, n: f64) -> f64 {
    4.0 * (p * (1.0 - p) / n).sqrt()
}

#[test]
fn ideal_sampler_frequencies() {
    let s = single_slot(PauliChannel::new(vec![0], [(pauli("I"), 0.9), (pauli("X"), 0.1)]).unwrap(), 1);
    let mut rng = stream(1, Purpose::Test, 0, 0);
    let n = 1_000_000;
    let hits = (0..n).filter(|_| s.error_sample(0, &mut rng).unwrap() == pauli("X")).count();
    assert!((hits as f64 / n as f64 - 0.1).abs() < four_sigma(0.1, n as f64));

    let d = single_slot(sni::noise::depolarizing_on(vec![0], 0.2).unwrap(), 1);
    let n = 400_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        counts[d.error_sample(0, &mut rng).unwrap().index()] += 1;
    }
    for c in &counts[1..] {
        assert!((*c as f64 / n as f64 - 0.05).abs() < four_sigma(0.05, n as f64));
    }
}

#[test]
fn spacetime_nontrivial_rate_is_the_product_formula() {
    let p = 0.15;
    let s = single_slot(PauliChannel::new(vec![0], [(pauli("I"), 1.0 - p), (pauli("Z"), p)]).unwrap(), 2);
    let exact = 1.0 - (1.0 - p) * (1.0 - p);
    assert!((s.total_error_rate() - exact).abs() < 1e-15);
    let mut rng = stream(2, Purpose::Test, 0, 0);
    let mut tally = SamplerTally::new(1);
    let n = 200_000;
    let hits = (0..n).filter(|_| s.spacetime_sample(&mut rng, &mut tally).is_nontrivial()).count();
    assert!((hits as f64 / n as f64 - exact).abs() < four_sigma(exact, n as f64));
    assert_eq!(tally.instances, n as u64);
    assert_eq!(tally.nontrivial, hits as u64);
    assert_eq!(tally.kind_draws, vec![2 * n as u64]);
}

#[test]
fn processed_samples_multiply_cellwise() {
    let s = single_slot(PauliChannel::new(vec![0], [(pauli("I"), 0.7), (pauli("X"), 0.3)]).unwrap(), 1);
    let mut rng = stream(3, Purpose::Test, 0, 0);
    let mut tally = SamplerTally::new(1);
    let mut out = SpacetimeError::trivial(s.layout().clone());
    let mut scratch = Vec::new();
    for _ in 0..100 {
        s.processed_sample(0, &mut rng, &mut tally, &mut out, &mut scratch).unwrap();
        assert!(out.is_trivial());
        s.processed_sample(1, &mut rng, &mut tally, &mut out, &mut scratch).unwrap();
        assert_eq!(out.cell(0, 0), pauli("X"));
        s.processed_sample(2, &mut rng, &mut tally, &mut out, &mut scratch).unwrap();
        assert!(out.is_trivial());
    }
    assert_eq!(tally.nontrivial, 300);
}

#[test]
fn zero_rate_hits_the_rejection_cap() {
    let s = single_slot(PauliChannel::identity(vec![0]), 1);
    let mut rng = stream(4, Purpose::Test, 0, 0);
    let mut tally = SamplerTally::new(1);
    let mut out = SpacetimeError::trivial(s.layout().clone());
    let err = s.processed_sample(1, &mut rng, &mut tally, &mut out, &mut Vec::new()).unwrap_err();
    assert_eq!(err, sni::Error::NoNontrivialError(sni::sampler::REJECTION_CAP));
}

#[test]
fn boost_raises_the_acceptance_rate() {
    let s = single_slot(PauliChannel::new(vec![0], [(pauli("I"), 0.9), (pauli("X"), 0.1)]).unwrap(), 1).with_boost(0.2).unwrap();
    assert!((s.total_error_rate() - 0.28).abs() < 1e-15);
    let mut rng = stream(5, Purpose::Test, 0, 0);
    let mut tally = SamplerTally::new(1);
    let mut cells = Vec::new();
    let n = 200_000;
    let hits = (0..n).filter(|_| s.draw_accepted(&mut rng, &mut tally, &mut cells)).count();
    assert!((hits as f64 / n as f64 - 0.28).abs() < four_sigma(0.28, n as f64));

    let zero = single_slot(PauliChannel::identity(vec![0]), 1).with_boost(0.5).unwrap();
    let hits = (0..n).filter(|_| zero.draw_accepted(&mut rng, &mut tally, &mut cells)).count();
    assert!((hits as f64 / n as f64 - 0.5).abs() < four_sigma(0.5, n as f64));
    assert!(single_slot(PauliChannel::identity(vec![0]), 1).with_boost(1.0).is_err());
}

#[test]
fn practical_sampler_inserts_encode_decode_errors_except_before_measurements() {
    let mut c = Circuit::new(1);
    c.push(Operation::hadamard(0)).unwrap();
    c.push(Operation::measure(HermitianAxis::new(1, 0, 0).unwrap(), 0)).unwrap();
    let spec = NoiseSpec {
        encode_decode: Some(EncodeDecode { encode: 0.5.into(), decode: 0.0.into(), scope: "qubit".into() }),
        ..NoiseSpec::default()
    };
    let compiled = CompiledCircuit::new(&c, true).unwrap();
    let table = NoiseTable::bind(&spec, &compiled).unwrap();
    let s = ErrorSampler::new(SamplerChoice::Practical, &compiled, &table).unwrap();
    let h = compiled.kind_by_key("H[0]").unwrap();
    let m = compiled.kind_by_key("MEAS_X[0]").unwrap();
    assert!(s.encode_decode(0, h).is_some());
    let mut rng = stream(6, Purpose::Test, 0, 0);
    let mut tally = SamplerTally::new(compiled.kinds().len());
    let mut out = SpacetimeError::trivial(s.layout().clone());
    let mut seen = 0;
    for _ in 0..200 {
        s.processed_sample(0, &mut rng, &mut tally, &mut out, &mut Vec::new()).unwrap();
        let hp = s.layout().position_of_kind(h).unwrap();
        let mp = s.layout().position_of_kind(m).unwrap();
        assert!(out.cell(mp, 0).is_identity());
        seen += usize::from(!out.cell(hp, 0).is_identity());
    }
    assert!((40..110).contains(&seen), "{seen}");
    assert_eq!(tally.instances, 0);
}
