//! Acceptance suite: one pass/fail line per criterion, with its runtime budget.
//!
//! Run with `cargo test -p sni --test acceptance`. Study CSVs are written to `results/`.

mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use common::{flip_probability, gate_oracle, superop_on};
use sni::analytics;
use sni::circuit::{Circuit, CompiledCircuit, HermitianAxis, Operation, Role, TwirlPlan};
use sni::config::ExperimentConfig;
use sni::engine::{mitigate, sample_order, MitigationOptions, MitigationSetup, OrderDistribution, RateSource, RunSeed};
use sni::exec::Execution;
use sni::experiments::{self, bias_plateau, bias_slope, CostCheck};
use sni::linalg::{self, CMatrix};
use sni::noise::model::{NoiseSpec, NoiseTable};
use sni::noise::{coherent_rotation, compose, l1_pauli_norm, pauli_twirl, SignedPauliMap};
use sni::pauli::{Letter, PauliOperator, SpacetimeError};
use sni::report::summarize;
use sni::rng::{stream, Purpose};
use sni::sampler::{decode_axis, decode_bell, decode_bell_pair, ErrorSampler, SamplerChoice};
use sni::sim::{enumerate, ExactNoise, Program};

type Check = Result<(bool, String), String>;

/// Layout position, slot and the cell's channel.
type CellChannel = (usize, usize, Vec<(PauliOperator, f64)>);

type Criterion = (&'static str, u64, fn() -> Check);

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config(name: &str) -> Result<ExperimentConfig, String> {
    ExperimentConfig::load(&root().join("configs").join(name)).map_err(|e| e.to_string())
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn unbiasedness() -> Check {
    let c = config("trotter.toml")?;
    let circuit = c.build_circuit().map_err(err)?;
    let ideal = sni::sim::ideal_expectation(&circuit).map_err(err)?;
    let setup = MitigationSetup::new(&circuit, &c.noise, SamplerChoice::Ideal, true).map_err(err)?;
    let m = 1_000_000;
    let r = mitigate(&setup, RateSource::Exact, &MitigationOptions::new(m), RunSeed::new(c.seed, 0)).map_err(err)?;
    let tolerance = 4.0 * r.gamma / (m as f64).sqrt();
    let gap = (r.estimate - ideal).abs();
    Ok((gap < tolerance, format!("P = {:.4}, |Â - ⟨A⟩| = {gap:.2e} < 4γ/√M = {tolerance:.2e}", r.p_hat)))
}

fn bias_bound() -> Check {
    let mut c = config("phase-flip.toml")?;
    let circuit = c.build_circuit().map_err(err)?;
    let ideal = sni::sim::ideal_expectation(&circuit).map_err(err)?;
    let setup = MitigationSetup::new(&circuit, &c.noise, SamplerChoice::Ideal, false).map_err(err)?;
    let p = setup.exact_rate();
    c.run.shots = 20_000;
    let reps = 50;
    let mut pass = true;
    let mut notes = Vec::new();
    for p_hat in [p - 0.05, p + 0.05] {
        let estimates: Vec<f64> = (0..reps)
            .map(|rep| {
                mitigate(&setup, RateSource::Injected(p_hat), &MitigationOptions::new(c.run.shots), RunSeed::new(c.seed, rep))
                    .map(|r| r.estimate)
            })
            .collect::<Result<_, _>>()
            .map_err(err)?;
        let n = estimates.len() as f64;
        let mean = estimates.iter().sum::<f64>() / n;
        let sd = (estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let bias = (mean - ideal).abs();
        let bound = analytics::bias_bound(p, p_hat, circuit.sup_norm().map_err(err)?).map_err(err)?;
        pass &= bias <= bound + 4.0 * sd / n.sqrt();
        notes.push(format!("P̂ = {p_hat:.2}: |bias| = {bias:.4} ≤ {bound:.4} + 4se"));
    }
    Ok((pass, format!("P = {p:.2}; {}", notes.join("; "))))
}

fn cost_moments() -> Check {
    let out = experiments::experiment_cost_check(CostCheck::default(), Execution::Parallel).map_err(err)?;
    let s = &out.summary;
    let mut pass = true;
    let mut notes = Vec::new();
    for case in s["cases"].as_array().ok_or("missing cases")? {
        let (mz, vz) = (case["mean_z"].as_f64().unwrap_or(f64::NAN), case["variance_z"].as_f64().unwrap_or(f64::NAN));
        pass &= mz < 5.0 && vz < 5.0;
        notes.push(format!("P̂ = {}: z(mean) = {mz:.2}, z(var) = {vz:.2}", case["P_hat"]));
    }
    let ratio = s["ratio"].as_f64().unwrap_or(f64::NAN);
    pass &= (ratio - 6.0).abs() < 0.6;
    notes.push(format!("M_es/M at P = 1/4: {ratio:.3}"));
    Ok((pass, notes.join("; ")))
}

fn order_pmf() -> Check {
    let mut pass = true;
    let mut notes = Vec::new();
    for (i, p_hat) in [0.1, 0.25, 0.4].into_iter().enumerate() {
        let order = OrderDistribution::new(p_hat).map_err(err)?;
        let n = 1_000_000u64;
        let mut rng = stream(17, Purpose::Test, 0, i as u64);
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for _ in 0..n {
            *counts.entry(order.sample(&mut rng)).or_default() += 1;
        }
        let mut chi2 = 0.0;
        let mut bins = 0;
        let mut k = 0u32;
        let mut tail_expected = 1.0;
        let mut tail_observed = n as f64;
        loop {
            let expected = order.pmf(k) * n as f64;
            if expected < 5.0 || tail_expected * (n as f64) - expected < 5.0 {
                break;
            }
            let observed = *counts.get(&k).unwrap_or(&0) as f64;
            chi2 += (observed - expected).powi(2) / expected;
            tail_expected -= order.pmf(k);
            tail_observed -= observed;
            bins += 1;
            k += 1;
        }
        let tail = tail_expected * n as f64;
        chi2 += (tail_observed - tail).powi(2) / tail;
        bins += 1;
        let p_value = ChiSquared::new((bins - 1) as f64).map_err(err)?.sf(chi2);
        pass &= p_value > 0.001;
        notes.push(format!("P̂ = {p_hat}: χ² = {chi2:.1} on {} dof, p = {p_value:.3}", bins - 1));
    }
    let half = sample_order(0.5, &mut stream(17, Purpose::Test, 1, 0));
    let rejected = matches!(half, Err(sni::Error::Protocol(_)));
    pass &= rejected;
    notes.push(format!("P̂ = 0.5 rejected: {rejected}"));
    Ok((pass, notes.join("; ")))
}

fn linearity() -> Check {
    let z = HermitianAxis::pauli(Letter::Z);
    let x = HermitianAxis::pauli(Letter::X);
    let mut circuit = Circuit::new(2);
    for op in [Operation::prepare(x, 0), Operation::prepare(z, 1), Operation::t(0), Operation::cnot(0, 1)] {
        circuit.push(op).map_err(err)?;
    }
    circuit.measure_pauli_sum(&[(1.0, "XZ".parse().map_err(err)?)]).map_err(err)?;
    let noise: NoiseSpec = toml::from_str(
        r#"
        [[rules]]
        gate = "CNOT"
        channels = [{ kind = "depolarizing", p = 0.08 }]
        [[rules]]
        gate = "T"
        channels = [{ kind = "pauli", terms = { X = 0.03, Z = 0.05 } }]
        [[rules]]
        channels = [{ kind = "depolarizing", p = 0.04 }]
        "#,
    )
    .map_err(err)?;
    let compiled = Arc::new(CompiledCircuit::new(&circuit, false).map_err(err)?);
    let table = Arc::new(NoiseTable::bind(&noise, &compiled).map_err(err)?);
    let sampler = ErrorSampler::new(SamplerChoice::Ideal, &compiled, &table).map_err(err)?;
    let noisy = Program::new(compiled.clone(), Some(table)).map_err(err)?;
    let slots = circuit.slots().len();

    let key = |b: &sni::sim::Branch| (b.lambda, b.outcomes.values().to_vec());
    let mut native: BTreeMap<(usize, Vec<i8>), f64> = BTreeMap::new();
    for b in enumerate(&noisy, ExactNoise::Mixture, None).map_err(err)? {
        *native.entry(key(&b)).or_default() += b.probability;
    }

    let layout = sampler.layout().clone();
    let cells: Vec<CellChannel> = layout
        .entries()
        .iter()
        .enumerate()
        .flat_map(|(pos, e)| (0..e.slots).map(move |slot| (pos, slot, e.kind)))
        .map(|(pos, slot, kind)| (pos, slot, sampler.channel(0, kind).terms().to_vec()))
        .collect();
    let mut mixture: BTreeMap<(usize, Vec<i8>), f64> = BTreeMap::new();
    let mut index = vec![0usize; cells.len()];
    let mut instances = 0;
    loop {
        let mut error = SpacetimeError::trivial(layout.clone());
        let mut weight = 1.0;
        for (c, &i) in cells.iter().zip(&index) {
            error.set_cell(c.0, c.1, c.2[i].0);
            weight *= c.2[i].1;
        }
        for b in enumerate(&noisy, ExactNoise::Off, Some(&error)).map_err(err)? {
            *mixture.entry(key(&b)).or_default() += weight * b.probability;
        }
        instances += 1;
        let mut d = 0;
        while d < cells.len() {
            index[d] += 1;
            if index[d] < cells[d].2.len() {
                break;
            }
            index[d] = 0;
            d += 1;
        }
        if d == cells.len() {
            break;
        }
    }
    let keys: std::collections::BTreeSet<_> = native.keys().chain(mixture.keys()).cloned().collect();
    let gap =
        keys.iter().map(|k| (native.get(k).copied().unwrap_or(0.0) - mixture.get(k).copied().unwrap_or(0.0)).abs()).fold(0.0, f64::max);
    Ok((gap < 1e-10, format!("{slots} slots, {instances} spacetime errors, max |Δ probability| = {gap:.1e}")))
}

fn practical_fidelity() -> Check {
    use sni::circuit::Gate;
    let mut tables = decode_bell(1, 1) == Letter::I
        && decode_bell(1, -1) == Letter::X
        && decode_bell(-1, 1) == Letter::Z
        && decode_bell(-1, -1) == Letter::Y;
    for (index, outcome) in [[1, 1, 1, 1], [1, -1, 1, -1], [-1, 1, -1, -1], [-1, -1, 1, 1]].into_iter().enumerate() {
        let want = ["II", "XX", "ZY", "YI"][index];
        tables &= decode_bell_pair(outcome) == want.parse::<PauliOperator>().map_err(err)?;
    }
    for (axis, letter) in [((0, 0, 1), Letter::X), ((1, 0, 0), Letter::Z), ((1, 1, 0), Letter::Z), ((1, 0, 1), Letter::Y)] {
        let a = HermitianAxis::new(axis.0, axis.1, axis.2).map_err(err)?;
        tables &= decode_axis(&a, 1).map_err(err)? == Letter::I && decode_axis(&a, -1).map_err(err)? == letter;
    }

    let mut c = config("trotter.toml")?;
    c.noise.encode_decode = Some(
        toml::from_str(
            r#"encode = "p/3"
decode = "p/3""#,
        )
        .map_err(err)?,
    );
    let circuit = c.build_circuit().map_err(err)?;
    let setup = MitigationSetup::new(&circuit, &c.noise, SamplerChoice::Practical, true).map_err(err)?;
    let compiled = setup.program.compiled();
    let table = setup.program.noise().ok_or("no noise table")?;
    let n = 1_000_000u64;
    let mut worst: (f64, String) = (0.0, String::new());
    for (k, info) in compiled.kinds().iter().enumerate() {
        if matches!(info.operation.gate(), Gate::Pauli(_)) {
            continue;
        }
        let noise = &table.scenario(0).kinds[k];
        let q = noise.support.len();
        let oracle: Vec<f64> = match info.operation.role() {
            Role::Gate => gate_oracle(&info.operation, noise).dense(),
            role => {
                let axis = info.operation.axis().ok_or("axis")?;
                let map = if role == Role::Prepare {
                    noise
                        .native
                        .superoperator(&noise.support)
                        .map_err(err)?
                        .then(&superop_on(&noise.encode, &noise.support))
                        .map_err(err)?
                } else {
                    superop_on(&noise.decode, &noise.support)
                        .then(&noise.native.superoperator(&noise.support).map_err(err)?)
                        .map_err(err)?
                };
                let flip = flip_probability(&axis, &map);
                let mut dense = vec![0.0; 4];
                dense[0] = 1.0 - flip;
                dense[PauliOperator::single(1, 0, axis.anticommuting_error()).index()] = flip;
                dense
            }
        };
        let mut counts = vec![0u64; 1 << (2 * q)];
        let mut rng = stream(5, Purpose::Test, 2, k as u64);
        for _ in 0..n {
            counts[setup.sampler.error_sample(k, &mut rng).map_err(err)?.index()] += 1;
        }
        let tv = 0.5 * counts.iter().zip(&oracle).map(|(&c, &p)| (c as f64 / n as f64 - p).abs()).sum::<f64>();
        if tv >= worst.0 {
            worst = (tv, info.key.clone());
        }
    }
    Ok((tables && worst.0 < 5e-3, format!("decode tables exact: {tables}; worst TV = {:.1e} ({})", worst.0, worst.1)))
}

fn frame_unitary(ops: &[Operation], n: usize) -> Result<CMatrix, String> {
    let mut u = linalg::identity(1 << n);
    for op in ops {
        let m = op.unitary().ok_or_else(|| format!("{op} has no unitary"))?;
        u = linalg::embed(&m, op.qubits(), n) * u;
    }
    Ok(u)
}

fn twirling() -> Check {
    let mut worst_twirl: f64 = 0.0;
    for theta in [0.05, 0.3, 1.1] {
        let s = coherent_rotation(theta, &"Z".parse().map_err(err)?, vec![0]).map_err(err)?;
        let c = pauli_twirl(&s).map_err(err)?;
        let d = c.dense();
        let want = [(theta / 2.0).cos().powi(2), 0.0, (theta / 2.0).sin().powi(2), 0.0];
        worst_twirl = worst_twirl.max(d.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let x = HermitianAxis::pauli(Letter::X);
    let z = HermitianAxis::pauli(Letter::Z);
    let xy = HermitianAxis::new(1, 1, 0).map_err(err)?;
    let n = 3;
    let ops = vec![
        Operation::pauli("XZ".parse().map_err(err)?, vec![0, 2]).map_err(err)?,
        Operation::hadamard(1),
        Operation::phase(0),
        Operation::cnot(2, 0),
        Operation::t(1),
        Operation::layer("L", vec![Operation::t(0), Operation::cnot(1, 2)]).map_err(err)?,
        Operation::prepare(x, 1),
        Operation::prepare(xy, 0),
        Operation::measure(z, 2),
        Operation::measure(xy, 1),
    ];
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for op in &ops {
        let plan = TwirlPlan::new(op).map_err(err)?;
        for choices in plan.all_choices() {
            let list = plan.operations(&plan.expansion_for(&choices).map_err(err)?);
            rows += 1;
            let deviation = match op.role() {
                Role::Gate => {
                    let want = linalg::embed(&op.unitary().ok_or("unitary")?, op.qubits(), n);
                    linalg::distance_up_to_phase(&frame_unitary(&list, n)?, &want)
                }
                Role::Prepare => {
                    let after = &list[list.iter().position(|o| o == op).ok_or("op missing")? + 1..];
                    let u = frame_unitary(after, n)?;
                    let psi = op.axis().ok_or("axis")?.eigenstate();
                    let rho = linalg::embed(&CMatrix::from_fn(2, 2, |r, c| psi[r] * psi[c].conj()), op.qubits(), n);
                    linalg::distance(&(&u * &rho * linalg::dagger(&u)), &rho)
                }
                Role::Measure => {
                    let before = &list[..list.iter().position(|o| o == op).ok_or("op missing")?];
                    let u = frame_unitary(before, n)?;
                    let kappa = linalg::embed(&op.axis().ok_or("axis")?.matrix(), op.qubits(), n);
                    linalg::distance(&(linalg::dagger(&u) * &kappa * &u), &kappa)
                }
            };
            worst = worst.max(deviation);
        }
    }
    Ok((
        worst_twirl < 1e-10 && worst < 1e-10,
        format!("coherent twirl error {worst_twirl:.1e}; {rows} expansions, worst deviation {worst:.1e}"),
    ))
}

fn submultiplicativity() -> Check {
    let mut rng = stream(23, Purpose::Test, 3, 0);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..200 {
        let q = rng.gen_range(1..=2);
        let mut draw = || {
            let mut terms = Vec::new();
            for p in PauliOperator::all(q) {
                if rng.gen_bool(0.7) {
                    terms.push((p, rng.gen_range(-1.0..1.0)));
                }
            }
            SignedPauliMap::new((0..q).collect(), terms)
        };
        let (a, b) = (draw().map_err(err)?, draw().map_err(err)?);
        let ab = compose(&a, &b).map_err(err)?;
        worst = worst.max(l1_pauli_norm(&ab) - l1_pauli_norm(&a) * l1_pauli_norm(&b));
    }
    Ok((worst <= 1e-12, format!("max ‖AB‖ - ‖A‖‖B‖ = {worst:.2e} over 200 pairs")))
}

fn fluctuating_study() -> Check {
    let mut c = config("fluctuating.toml")?;
    c.run.shots = 50_000;
    c.run.repetitions = 24;
    let out = experiments::experiment_fluctuating(c, Execution::Parallel).map_err(err)?;
    out.write(&root().join("results")).map_err(err)?;
    let groups = summarize(&out.rows);
    let slope = bias_slope(&groups, "fluctuating-sni-cv").map_err(err)?;
    let plateau = bias_plateau(&groups, "fluctuating-cpec").map_err(err)?;
    let pass = (slope + 0.5).abs() <= 0.15 && plateau.difference < 2.0 * plateau.sigma;
    Ok((
        pass,
        format!(
            "SNI |bias| slope {slope:.3}; cPEC |bias| {:.4} vs {:.4}, Δ = {:.1e} < 2σ = {:.1e}",
            groups.iter().filter(|g| g.experiment == "fluctuating-cpec").nth_back(1).map_or(f64::NAN, |g| g.mean_abs_bias),
            groups.iter().rfind(|g| g.experiment == "fluctuating-cpec").map_or(f64::NAN, |g| g.mean_abs_bias),
            plateau.difference,
            2.0 * plateau.sigma
        ),
    ))
}

fn spatial_study() -> Check {
    let mut c = config("spatial.toml")?;
    c.run.shots = 50_000;
    c.run.repetitions = 10;
    let out = experiments::experiment_spatial(c, Execution::Parallel).map_err(err)?;
    out.write(&root().join("results")).map_err(err)?;
    let groups = summarize(&out.rows);
    let group = |name: &str| groups.iter().find(|g| g.experiment == name).cloned().ok_or(format!("missing {name}"));
    let (sni, cpec) = (group("spatial-sni")?, group("spatial-cpec")?);
    Ok((
        sni.z_score() < 4.0 && cpec.z_score() > 5.0,
        format!("SNI bias {:.1e} ({:.1}σ); cPEC bias {:.1e} ({:.1}σ)", sni.mean_bias, sni.z_score(), cpec.mean_bias, cpec.z_score()),
    ))
}

fn analytics_golden() -> Check {
    let t = analytics::t_p(0.1, 0.1).map_err(err)?;
    let o2 = analytics::surface_overhead(1.0, 2.0).map_err(err)?;
    let o13 = analytics::surface_overhead(1.0, 1.3).map_err(err)?;
    let pass = (t - 0.015385).abs() < 5e-7 && (o2 - 33.3).abs() < 0.05 && (o13 - 10.0).abs() < 0.2;
    Ok((pass, format!("t_P = {t:.6}, overhead(2) = {o2:.2}, overhead(1.3) = {o13:.2}")))
}

fn rate_for(c: &ExperimentConfig, circuit: &Circuit, p: f64) -> Result<f64, String> {
    let mut noise = c.noise.clone();
    noise.params.insert("p".into(), p);
    Ok(MitigationSetup::new(circuit, &noise, SamplerChoice::Ideal, true).map_err(err)?.exact_rate())
}

fn end_to_end_coverage() -> Check {
    let (delta, f, target) = (0.3, 0.1, 0.15);
    let mut c = config("trotter.toml")?;
    let circuit = c.build_circuit().map_err(err)?;
    let (mut lo, mut hi) = (0.0, 0.05);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if rate_for(&c, &circuit, mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    c.noise.params.insert("p".into(), 0.5 * (lo + hi));
    let setup = MitigationSetup::new(&circuit, &c.noise, SamplerChoice::Ideal, true).map_err(err)?;
    let p = setup.exact_rate();
    let ideal = sni::sim::ideal_expectation(&circuit).map_err(err)?;
    let sup = circuit.sup_norm().map_err(err)?;
    let m_p = analytics::min_m_p(delta, f, p).map_err(err)?;
    let m = analytics::min_m(delta, f, p).map_err(err)?;
    let reps = 200;
    let mut hits = 0;
    for rep in 0..reps {
        let r = mitigate(&setup, RateSource::Estimate { m_p }, &MitigationOptions::new(m), RunSeed::new(31, rep)).map_err(err)?;
        if (r.estimate - ideal).abs() <= delta * sup {
            hits += 1;
        }
    }
    let coverage = hits as f64 / reps as f64;
    let floor = (1.0 - f) - 3.0 * (f * (1.0 - f) / reps as f64).sqrt();
    Ok((coverage >= floor, format!("P = {p:.4}, M_P = {m_p}, M = {m}: coverage {coverage:.3} ≥ {floor:.3}")))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("unbiasedness at P̂ = P", 120, unbiasedness),
        ("bias bound", 300, bias_bound),
        ("cost moments", 300, cost_moments),
        ("order distribution", 60, order_pmf),
        ("spacetime noise linearity", 60, linearity),
        ("practical sampler fidelity", 300, practical_fidelity),
        ("twirling", 60, twirling),
        ("L1-Pauli submultiplicativity", 60, submultiplicativity),
        ("fluctuating-noise study", 1800, fluctuating_study),
        ("spatial-correlation study", 1200, spatial_study),
        ("analytics golden values", 1, analytics_golden),
        ("end-to-end coverage", 900, end_to_end_coverage),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, budget, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_budget = elapsed <= Duration::from_secs(budget);
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass && in_budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} {name}: {detail} [{:.1}s / {budget}s]", if pass { "PASS" } else { "FAIL" }, elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
