//! Drivers behind the command-line operations and the two mitigation studies.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use crate::analytics;
use crate::circuit::Circuit;
use crate::config::ExperimentConfig;
use crate::engine::{
    estimate_observed, estimate_total_error_rate, mitigate_at, sampling_cost, MitigationOptions, MitigationResult, MitigationSetup,
    RateEstimate, RunSeed,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::noise::PauliChannel;
use crate::pauli::{LayoutEntry, PauliOperator, SpacetimeLayout};
use crate::pec::{fit_sparse_model, run_cpec, SiteMap, SparseCounts};
use crate::report::{loglog_slope, summarize, ExperimentOutput, GroupSummary, ResultRow};
use crate::sampler::ErrorSampler;
use crate::sim::ideal_expectation;

/// Scale declaration written into every study summary.
pub const DESK_SCALE_NOTE: &str =
    "desk scale: M_P up to 1e6 and M up to 1e5 per point; the 2.56e8-instance / 2.56e7-shot budgets of a full-scale study are not reproduced";

/// A configuration compiled into its circuit, ideal value and mitigation setup.
#[derive(Clone, Debug)]
pub struct Session {
    pub config: ExperimentConfig,
    pub circuit: Circuit,
    pub setup: MitigationSetup,
    /// `⟨A⟩_I` from noiseless dense evolution.
    pub ideal: f64,
    pub execution: Execution,
}

impl Session {
    pub fn new(config: ExperimentConfig, execution: Execution) -> Result<Self> {
        let circuit = config.build_circuit()?;
        let ideal = ideal_expectation(&circuit)?;
        let mut setup = MitigationSetup::new(&circuit, &config.noise, config.sampler, config.twirl)?;
        if config.run.boost > 0.0 {
            setup.sampler = Arc::new((*setup.sampler).clone().with_boost(config.run.boost)?);
        }
        if config.run.rate_draws.is_empty() && config.run.injected_rate.is_none() {
            return Err(Error::Config("run.rate_draws is empty".into()));
        }
        if config.run.repetitions == 0 {
            return Err(Error::Config("run.repetitions must be at least 1".into()));
        }
        Ok(Session { config, circuit, setup, ideal, execution })
    }

    fn run_seed(&self, rep: u32) -> RunSeed {
        RunSeed::new(self.config.seed, rep)
    }

    fn draws(&self) -> Vec<u64> {
        let mut d = self.config.run.rate_draws.clone();
        d.sort_unstable();
        d.dedup();
        d
    }

    fn options(&self, reference_rate: Option<f64>) -> MitigationOptions {
        MitigationOptions { shots: self.config.run.shots, execution: self.execution, reference_rate }
    }

    fn metadata(&self, experiment: &str) -> serde_json::Value {
        json!({
            "experiment": experiment,
            "seed": self.config.seed,
            "repetitions": self.config.run.repetitions,
            "M": self.config.run.shots,
            "M_P": self.draws(),
            "sampler": self.config.sampler,
            "twirl": self.config.twirl,
            "qubits": self.circuit.qubit_count(),
            "exact_rate": self.setup.exact_rate(),
            "ideal": self.ideal,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    #[serde(flatten)]
    pub estimate: RateEstimate,
    /// The sampler's exact `P`.
    pub exact: f64,
    pub seed: u64,
}

/// Rate estimation with the largest configured `M_P`.
pub fn cmd_estimate_rate(config: ExperimentConfig, execution: Execution) -> Result<RateReport> {
    let session = Session::new(config, execution)?;
    let m_p = session.config.run.rate_draws_max();
    let (estimate, _) = estimate_total_error_rate(&session.setup.sampler, m_p, session.run_seed(0), execution)?;
    Ok(RateReport { estimate, exact: session.setup.exact_rate(), seed: session.config.seed })
}

fn sni_row(name: &str, session: &Session, rep: u32, m_p: u64, r: &MitigationResult) -> ResultRow {
    ResultRow::new(name, rep, m_p, r.shots, r.p_hat, r.gamma, r.estimate, session.ideal, r.sampling_cost(), session.config.seed)
}

/// SNI for every repetition and `M_P` (or at the injected rate).
pub fn cmd_mitigate(config: ExperimentConfig, execution: Execution) -> Result<ExperimentOutput> {
    let session = Session::new(config, execution)?;
    let mut rows = Vec::new();
    for rep in 0..session.config.run.repetitions {
        let run = session.run_seed(rep);
        if let Some(p_hat) = session.config.run.injected_rate {
            let r = mitigate_at(&session.setup, p_hat, None, &session.options(None), run)?;
            rows.push(sni_row("mitigate", &session, rep, 0, &r));
            continue;
        }
        for m_p in session.draws() {
            let (rate, _) = estimate_total_error_rate(&session.setup.sampler, m_p, run, execution)?;
            let r = mitigate_at(&session.setup, rate.p_hat, Some(rate), &session.options(None), run)?;
            rows.push(sni_row("mitigate", &session, rep, m_p, &r));
        }
    }
    Ok(finish("mitigate", &session, rows, json!({})))
}

/// Conventional PEC with a sparse model fitted from `M_P` spacetime instances.
pub fn cmd_cpec(config: ExperimentConfig, execution: Execution) -> Result<ExperimentOutput> {
    let session = Session::new(config, execution)?;
    let map = site_map(&session)?;
    let mut rows = Vec::new();
    for rep in 0..session.config.run.repetitions {
        let run = session.run_seed(rep);
        for m_p in session.draws() {
            rows.push(cpec_row("cpec", &session, &map, rep, m_p, run)?.0);
        }
    }
    Ok(finish("cpec", &session, rows, json!({})))
}

fn site_map(session: &Session) -> Result<Arc<SiteMap>> {
    Ok(Arc::new(SiteMap::new(session.setup.program.compiled(), session.setup.sampler.layout())?))
}

fn cpec_row(name: &str, session: &Session, map: &Arc<SiteMap>, rep: u32, m_p: u64, run: RunSeed) -> Result<(ResultRow, RateEstimate)> {
    let (rate, _, counts) = estimate_observed(&session.setup.sampler, m_p, run, session.execution, || SparseCounts::new(map.clone()))?;
    let model = fit_sparse_model(&counts)?;
    let r = run_cpec(&session.setup.program, &model, session.config.run.shots, run, session.execution)?;
    let row = ResultRow::new(name, rep, m_p, r.shots, rate.p_hat, r.gamma, r.estimate, session.ideal, m_p, session.config.seed);
    Ok((row, rate))
}

fn finish(name: &str, session: &Session, rows: Vec<ResultRow>, extra: serde_json::Value) -> ExperimentOutput {
    let mut summary = session.metadata(name);
    summary["groups"] = serde_json::to_value(summarize(&rows)).expect("summaries serialize");
    if let (Some(obj), serde_json::Value::Object(more)) = (summary.as_object_mut(), extra) {
        obj.extend(more);
    }
    ExperimentOutput { name: name.to_string(), rows, summary }
}

/// SNI and cPEC side by side for every repetition and `M_P`.
///
/// Rows: `<prefix>-sni` (SNI at the estimated `P̂`), `<prefix>-sni-cv` and `<prefix>-cpec`.
/// The `-sni-cv` estimate is `Â(P̂) - Â(P) + ⟨A⟩_I`, where `Â(P)` reweights the same
/// shots to the exact rate; it removes shot noise common to both and keeps the
/// bias caused by the error in `P̂`. The cPEC model is refitted from the first
/// `M_P` instances of the same instance stream that estimates `P̂`.
pub fn compare_methods(prefix: &str, session: &Session) -> Result<Vec<ResultRow>> {
    let exact = session.setup.exact_rate();
    let map = site_map(session)?;
    let (sni, cv, cpec) = (format!("{prefix}-sni"), format!("{prefix}-sni-cv"), format!("{prefix}-cpec"));
    let mut rows = Vec::new();
    for rep in 0..session.config.run.repetitions {
        let run = session.run_seed(rep);
        for m_p in session.draws() {
            let (cpec_row, rate) = cpec_row(&cpec, session, &map, rep, m_p, run)?;
            let r = mitigate_at(&session.setup, rate.p_hat, Some(rate), &session.options(Some(exact)), run)?;
            rows.push(sni_row(&sni, session, rep, m_p, &r));
            let reference = r.reference.expect("reference rate was requested");
            let cv_estimate = r.estimate - reference + session.ideal;
            rows.push(ResultRow::new(
                &cv,
                rep,
                m_p,
                r.shots,
                r.p_hat,
                r.gamma,
                cv_estimate,
                session.ideal,
                r.sampling_cost(),
                session.config.seed,
            ));
            rows.push(cpec_row);
        }
    }
    Ok(rows)
}

/// Slope of mean `|bias|` against `M_P` on log-log axes.
pub fn bias_slope(groups: &[GroupSummary], experiment: &str) -> Result<f64> {
    let points: Vec<(f64, f64)> = groups.iter().filter(|g| g.experiment == experiment).map(|g| (g.m_p as f64, g.mean_abs_bias)).collect();
    loglog_slope(&points)
}

/// Change of mean `|bias|` between the two largest `M_P` and its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Plateau {
    pub difference: f64,
    pub sigma: f64,
}

pub fn bias_plateau(groups: &[GroupSummary], experiment: &str) -> Result<Plateau> {
    let mut g: Vec<&GroupSummary> = groups.iter().filter(|g| g.experiment == experiment).collect();
    g.sort_by_key(|g| g.m_p);
    let [.., a, b] = g.as_slice() else {
        return Err(Error::Domain(format!("{experiment}: a plateau check needs two M_P values")));
    };
    let se = |g: &GroupSummary| g.std_abs_bias / (g.repetitions as f64).sqrt();
    Ok(Plateau { difference: (b.mean_abs_bias - a.mean_abs_bias).abs(), sigma: (se(a).powi(2) + se(b).powi(2)).sqrt() })
}

/// Bias of SNI and cPEC under a noise parameter that fluctuates between runs and instances.
pub fn experiment_fluctuating(config: ExperimentConfig, execution: Execution) -> Result<ExperimentOutput> {
    if config.noise.fluctuation.is_none() {
        return Err(Error::Config("the fluctuating experiment needs a noise.fluctuation section".into()));
    }
    let session = Session::new(config, execution)?;
    let rows = compare_methods("fluctuating", &session)?;
    let groups = summarize(&rows);
    let fits = json!({
        "sni_cv_slope": bias_slope(&groups, "fluctuating-sni-cv").ok(),
        "sni_slope": bias_slope(&groups, "fluctuating-sni").ok(),
        "cpec_plateau": bias_plateau(&groups, "fluctuating-cpec").ok(),
        "scale": DESK_SCALE_NOTE,
    });
    Ok(finish("fluctuating", &session, rows, fits))
}

/// Bias of SNI and cPEC under spatially correlated noise on four qubits.
pub fn experiment_spatial(config: ExperimentConfig, execution: Execution) -> Result<ExperimentOutput> {
    let session = Session::new(config, execution)?;
    if session.circuit.qubit_count() != 4 {
        return Err(Error::Config(format!("the spatial experiment runs on 4 qubits, got {}", session.circuit.qubit_count())));
    }
    let rows = compare_methods("spatial", &session)?;
    let groups = summarize(&rows);
    let top = session.draws().last().copied().unwrap_or(0);
    let z = |name: &str| groups.iter().find(|g| g.experiment == name && g.m_p == top).map(GroupSummary::z_score);
    let extra = json!({
        "sni_z": z("spatial-sni"),
        "cpec_z": z("spatial-cpec"),
        "scale": DESK_SCALE_NOTE,
    });
    Ok(finish("spatial", &session, rows, extra))
}

/// Settings of the sampling-cost check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostCheck {
    pub seed: u64,
    pub repetitions: u32,
    pub shots: u64,
    pub rate_draws: u64,
}

impl Default for CostCheck {
    fn default() -> Self {
        CostCheck { seed: 1, repetitions: 200, shots: 2000, rate_draws: 1000 }
    }
}

/// A one-cell sampler whose instances are nontrivial with probability `p`.
pub fn single_cell_sampler(p: f64) -> Result<ErrorSampler> {
    let layout = Arc::new(SpacetimeLayout::new(vec![LayoutEntry { kind: 0, slots: 1, support: vec![0] }]));
    let channel = PauliChannel::new(vec![0], [(PauliOperator::identity(1), 1.0 - p), ("X".parse()?, p)])?;
    ErrorSampler::from_channels(layout, vec![(1.0, vec![channel])])
}

/// Empirical moments of `M_es` next to their closed forms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostComparison {
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "P_hat")]
    pub p_hat: f64,
    #[serde(rename = "M_P")]
    pub m_p: u64,
    #[serde(rename = "M")]
    pub m: u64,
    pub mean: f64,
    pub variance: f64,
    pub expected_mean: f64,
    pub expected_variance: f64,
    /// `|mean - expected| / standard error of the mean`.
    pub mean_z: f64,
    /// `|variance - expected| / standard error of the variance`.
    pub variance_z: f64,
}

fn cost_case(check: &CostCheck, p: f64, p_hat: f64, m_p: u64, execution: Execution, rows: &mut Vec<ResultRow>) -> Result<CostComparison> {
    let sampler = single_cell_sampler(p)?;
    let expected = analytics::cost_moments(m_p, check.shots, p, p_hat)?;
    let gamma = 1.0 / (1.0 - 2.0 * p_hat);
    let mut costs = Vec::with_capacity(check.repetitions as usize);
    for rep in 0..check.repetitions {
        let tally = sampling_cost(&sampler, p_hat, check.shots, RunSeed::new(check.seed, rep), execution)?;
        let m_es = m_p + tally.instances;
        rows.push(ResultRow::new("cost-check", rep, m_p, check.shots, p_hat, gamma, m_es as f64, expected.mean, m_es, check.seed));
        costs.push(m_es as f64);
    }
    let n = costs.len() as f64;
    let mean = costs.iter().sum::<f64>() / n;
    let variance = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let fourth = costs.iter().map(|c| (c - mean).powi(4)).sum::<f64>() / n;
    let variance_se = ((fourth - variance * variance * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt();
    Ok(CostComparison {
        p,
        p_hat,
        m_p,
        m: check.shots,
        mean,
        variance,
        expected_mean: expected.mean,
        expected_variance: expected.variance,
        mean_z: (mean - expected.mean).abs() / (expected.variance / n).sqrt(),
        variance_z: (variance - expected.variance).abs() / variance_se,
    })
}

/// Sampling-cost moments at `(P, P̂) = (0.2, 0.2)`, `(0.2, 0.25)` and the `M_es/M` ratio at `P = 1/4`.
pub fn experiment_cost_check(check: CostCheck, execution: Execution) -> Result<ExperimentOutput> {
    let mut rows = Vec::new();
    let cases = vec![
        cost_case(&check, 0.2, 0.2, check.rate_draws, execution, &mut rows)?,
        cost_case(&check, 0.2, 0.25, check.rate_draws, execution, &mut rows)?,
    ];
    let mut ratio_rows = Vec::new();
    let m_p = (check.shots as f64 / (1.0 - 2.0 * 0.25f64).powi(2)).round() as u64;
    let ratio_case = cost_case(&check, 0.25, 0.25, m_p, execution, &mut ratio_rows)?;
    let ratio = ratio_case.mean / check.shots as f64;
    rows.extend(ratio_rows);
    let summary = json!({
        "experiment": "cost-check",
        "seed": check.seed,
        "repetitions": check.repetitions,
        "M": check.shots,
        "cases": cases,
        "ratio_case": ratio_case,
        "ratio": ratio,
        "asymptotic_ratio": analytics::asymptotic_cost_ratio(0.25)?,
    });
    Ok(ExperimentOutput { name: "cost-check".into(), rows, summary })
}

/// Inputs of the `bounds` command.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundsArgs {
    pub delta: f64,
    pub f: f64,
    pub p: f64,
    pub p_hat: Option<f64>,
    pub sup_norm: f64,
    pub shots: Option<u64>,
    pub rate_draws: Option<u64>,
}

/// `key=value` lines with `t_P`, the minimum sample counts and, when `P̂` is given, the bias bound and cost moments.
pub fn cmd_bounds(args: &BoundsArgs) -> Result<String> {
    let mut out = String::new();
    let mut line = |k: &str, v: String| writeln!(out, "{k}={v}").expect("writing to a String");
    line("delta", args.delta.to_string());
    line("f", args.f.to_string());
    line("P", args.p.to_string());
    line("t_P", analytics::t_p(args.delta, args.p)?.to_string());
    line("M_P_min", analytics::min_m_p(args.delta, args.f, args.p)?.to_string());
    line("M_min", analytics::min_m(args.delta, args.f, args.p)?.to_string());
    line("asymptotic_cost_ratio", analytics::asymptotic_cost_ratio(args.p)?.to_string());
    if let Some(p_hat) = args.p_hat {
        line("P_hat", p_hat.to_string());
        line("bias_bound", analytics::bias_bound(args.p, p_hat, args.sup_norm)?.to_string());
        if let (Some(m), Some(m_p)) = (args.shots, args.rate_draws) {
            let c = analytics::cost_moments(m_p, m, args.p, p_hat)?;
            line("cost_mean", c.mean.to_string());
            line("cost_variance", c.variance.to_string());
        }
    }
    Ok(out)
}
