use std::path::PathBuf;

use proptest::prelude::*;
use sni::config::ExperimentConfig;
use sni::exec::Execution;
use sni::experiments::{cmd_bounds, cmd_cpec, cmd_estimate_rate, cmd_mitigate, experiment_cost_check, BoundsArgs, CostCheck};
use sni::report::{from_csv, loglog_slope, summarize, to_csv, ResultRow, COLUMNS};
use sni::Error;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&configs().join(name)).unwrap()
}

const MINIMAL: &str = r#"
seed = 1
[circuit]
qubits = 1
[[circuit.slots]]
op = { gate = "PREP", axis = "Z", qubits = [0] }
[[circuit.slots]]
op = { gate = "H", qubits = [0] }
[[circuit.slots]]
op = { gate = "MEAS", axis = "X", qubits = [0] }
[[circuit.observable]]
outcomes = [[2, 0]]
"#;

fn config_error(text: &str) -> String {
    match ExperimentConfig::from_toml(text).and_then(|c| c.build_circuit().map(|_| ())) {
        Err(Error::Config(msg)) => msg,
        other => panic!("expected a configuration error, got {other:?}"),
    }
}

#[test]
fn shipped_configs_build() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let config = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            config.build_circuit().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
}

#[test]
fn defaults_apply() {
    let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
    assert!(c.twirl);
    assert_eq!(c.run.shots, 10_000);
    assert_eq!(c.run.rate_draws, vec![10_000]);
    assert_eq!(c.run.repetitions, 30);
    assert!(c.noise.rules.is_empty());
}

#[test]
fn unknown_fields_are_rejected() {
    let msg = config_error(&format!("{MINIMAL}\n[run]\nshotz = 3\n"));
    assert!(msg.contains("shotz"), "{msg}");
}

#[test]
fn syntax_errors_report_their_position() {
    let msg = config_error("seed = \n[circuit]\n");
    assert!(msg.contains("line 1"), "{msg}");
}

#[test]
fn circuit_errors() {
    assert!(config_error("[circuit]\nbuiltin = \"nope\"\n").contains("nope"));
    assert!(config_error("[circuit]\nslots = []\n").contains("qubits"));
    let bad_arity = MINIMAL.replace(r#"gate = "H", qubits = [0]"#, r#"gate = "CNOT", qubits = [0]"#);
    assert!(config_error(&bad_arity).contains("slots[1]"));
    let no_observable = MINIMAL.replace("[[circuit.observable]]\noutcomes = [[2, 0]]\n", "");
    assert!(config_error(&no_observable).contains("observable"));
}

#[test]
fn noise_rules_must_name_present_gates() {
    let text = format!("{MINIMAL}\n[[noise.rules]]\ngate = \"T\"\nchannels = [{{ kind = \"depolarizing\", p = 0.1 }}]\n");
    assert!(config_error(&text).contains("'T'"));
}

#[test]
fn missing_file_is_a_config_error() {
    let err = ExperimentConfig::load(&configs().join("missing.toml")).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn estimate_rate_command() {
    let report = cmd_estimate_rate(load("phase-flip.toml"), Execution::default()).unwrap();
    assert_eq!(report.estimate.m_p, 100_000);
    assert!((report.exact - 0.2).abs() < 1e-15);
    assert!((report.estimate.p_hat - 0.2).abs() < 4.0 * (0.16f64 / 1e5).sqrt());
}

#[test]
fn noiseless_commands_return_the_ideal_value() {
    let mut config = load("noiseless.toml");
    config.run.repetitions = 2;
    config.run.shots = 500;
    let out = cmd_mitigate(config.clone(), Execution::default()).unwrap();
    assert!(!out.rows.is_empty());
    for r in &out.rows {
        assert!(r.bias.abs() < 1e-12 && r.gamma == 1.0, "{r:?}");
    }
    let out = cmd_cpec(config, Execution::default()).unwrap();
    for r in &out.rows {
        assert!(r.bias.abs() < 1e-12, "{r:?}");
    }
}

#[test]
fn injected_rate_of_one_half_is_rejected() {
    let mut config = load("phase-flip.toml");
    config.run.injected_rate = Some(0.5);
    let err = cmd_mitigate(config, Execution::default()).unwrap_err();
    assert!(matches!(err, Error::Protocol(_)));
}

#[test]
fn outputs_are_reproducible() {
    let mut config = load("phase-flip.toml");
    config.run.shots = 3000;
    config.run.rate_draws = vec![1000, 4000];
    config.run.repetitions = 3;
    let a = cmd_mitigate(config.clone(), Execution::Parallel).unwrap();
    let b = cmd_mitigate(config.clone(), Execution::Sequential).unwrap();
    assert_eq!(to_csv(&a.rows).unwrap(), to_csv(&b.rows).unwrap());
    let root = std::env::temp_dir().join(format!("sni-repro-{}", std::process::id()));
    let (first, _) = a.write(&root.join("a")).unwrap();
    let (second, _) = cmd_mitigate(config, Execution::default()).unwrap().write(&root.join("b")).unwrap();
    assert_eq!(std::fs::read(first).unwrap(), std::fs::read(second).unwrap());
    std::fs::remove_dir_all(root).unwrap();
}

#[test]
fn csv_round_trip() {
    let rows = vec![
        ResultRow::new("a-sni", 0, 1000, 500, 0.21, 1.72, 0.61, 0.6, 1600, 7),
        ResultRow::new("a-sni", 1, 1000, 500, 0.19, 1.61, 0.58, 0.6, 1580, 7),
        ResultRow::new("a-cpec", 0, 1000, 500, 0.0, 1.2, 0.5, 0.6, 1000, 7),
    ];
    let text = to_csv(&rows).unwrap();
    assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
    assert_eq!(from_csv(&text).unwrap(), rows);
    assert!(from_csv("x,y\n1,2\n").is_err());
    let groups = summarize(&rows);
    assert_eq!(groups.len(), 2);
    assert_eq!(groups[0].experiment, "a-sni");
    assert_eq!(groups[0].repetitions, 2);
    assert!((groups[0].mean_bias - (-0.005)).abs() < 1e-12);
}

#[test]
fn loglog_slope_of_a_power_law() {
    let points: Vec<(f64, f64)> = [1e4, 1e5, 1e6].iter().map(|&x: &f64| (x, 3.0 / x.sqrt())).collect();
    assert!((loglog_slope(&points).unwrap() + 0.5).abs() < 1e-12);
    assert!(loglog_slope(&points[..1]).is_err());
    assert!(loglog_slope(&[(1.0, 1.0), (2.0, 0.0)]).is_err());
}

#[test]
fn bounds_report() {
    let text = cmd_bounds(&BoundsArgs {
        delta: 0.1,
        f: 0.05,
        p: 0.1,
        p_hat: Some(0.12),
        sup_norm: 1.0,
        shots: Some(1000),
        rate_draws: Some(5000),
    })
    .unwrap();
    let get = |key: &str| -> f64 {
        text.lines().find_map(|l| l.strip_prefix(&format!("{key}="))).unwrap_or_else(|| panic!("{key} in {text}")).parse().unwrap()
    };
    assert!((get("t_P") - 0.064 / 4.16).abs() < 1e-12);
    assert!((get("bias_bound") - (1.0 / 0.76 - 1.0 / 0.8)).abs() < 1e-12);
    assert!(get("M_P_min") > 0.0 && get("M_min") > 0.0);
    assert!(matches!(
        cmd_bounds(&BoundsArgs { delta: 0.1, f: 0.05, p: 0.6, p_hat: None, sup_norm: 1.0, shots: None, rate_draws: None }),
        Err(Error::Domain(_))
    ));
}

#[test]
fn small_cost_check() {
    let out = experiment_cost_check(CostCheck { seed: 3, repetitions: 40, shots: 500, rate_draws: 200 }, Execution::default()).unwrap();
    assert!(!out.rows.is_empty());
    assert!(out.rows.iter().all(|r| r.experiment == "cost-check"));
}

proptest! {
    #[test]
    fn bias_column_is_estimate_minus_ideal(estimate in -10.0f64..10.0, ideal in -1.0f64..1.0) {
        let r = ResultRow::new("x", 0, 1, 1, 0.1, 1.25, estimate, ideal, 2, 0);
        prop_assert_eq!(r.bias, estimate - ideal);
        let back = from_csv(&to_csv(std::slice::from_ref(&r)).unwrap()).unwrap();
        prop_assert_eq!(back, vec![r]);
    }
}
