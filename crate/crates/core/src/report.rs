//! Result rows, CSV/JSON output and per-group aggregates.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column order of every result CSV.
pub const COLUMNS: [&str; 11] = ["experiment", "rep", "M_P", "M", "P_hat", "gamma", "estimate", "ideal", "bias", "M_es", "seed"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub rep: u32,
    #[serde(rename = "M_P")]
    pub m_p: u64,
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "P_hat")]
    pub p_hat: f64,
    pub gamma: f64,
    pub estimate: f64,
    pub ideal: f64,
    /// `estimate - ideal`.
    pub bias: f64,
    #[serde(rename = "M_es")]
    pub m_es: u64,
    pub seed: u64,
}

impl ResultRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        experiment: &str,
        rep: u32,
        m_p: u64,
        m: u64,
        p_hat: f64,
        gamma: f64,
        estimate: f64,
        ideal: f64,
        m_es: u64,
        seed: u64,
    ) -> Self {
        ResultRow { experiment: experiment.to_string(), rep, m_p, m, p_hat, gamma, estimate, ideal, bias: estimate - ideal, m_es, seed }
    }
}

/// Rows of one experiment with its JSON summary.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub name: String,
    pub rows: Vec<ResultRow>,
    pub summary: serde_json::Value,
}

impl ExperimentOutput {
    /// Writes `<dir>/<name>.csv` and `<dir>/<name>.summary.json`; returns both paths.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let csv_path = dir.join(format!("{}.csv", self.name));
        let json_path = dir.join(format!("{}.summary.json", self.name));
        fs::write(&csv_path, to_csv(&self.rows)?).map_err(|e| io(&csv_path, e))?;
        let json = serde_json::to_string_pretty(&self.summary).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(&json_path, json + "\n").map_err(|e| io(&json_path, e))?;
        Ok((csv_path, json_path))
    }

    pub fn rows_of<'a>(&'a self, experiment: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.experiment == experiment)
    }
}

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

pub fn to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(COLUMNS).map_err(|e| Error::Config(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

pub fn from_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(|e| Error::Config(e.to_string()))?.iter().map(String::from).collect();
    if header != COLUMNS {
        return Err(Error::Config(format!("unexpected CSV columns {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(|e| Error::Config(e.to_string()))).collect()
}

/// Aggregates of one `(experiment, M_P)` group over repetitions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupSummary {
    pub experiment: String,
    #[serde(rename = "M_P")]
    pub m_p: u64,
    pub repetitions: usize,
    pub mean_bias: f64,
    /// Standard error of `mean_bias`.
    pub bias_std_error: f64,
    pub mean_abs_bias: f64,
    /// Standard deviation of `|bias|` over repetitions.
    pub std_abs_bias: f64,
    pub mean_gamma: f64,
    pub mean_p_hat: f64,
    pub mean_m_es: f64,
}

impl GroupSummary {
    /// `|mean bias| / standard error`.
    pub fn z_score(&self) -> f64 {
        self.mean_bias.abs() / self.bias_std_error
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Groups rows by experiment id and `M_P`, in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<GroupSummary> {
    let mut order: Vec<(String, u64)> = Vec::new();
    let mut groups: BTreeMap<(String, u64), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        let key = (r.experiment.clone(), r.m_p);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let col = |f: fn(&ResultRow) -> f64| g.iter().map(|r| f(r)).collect::<Vec<_>>();
            let (mean_bias, sd_bias) = mean_sd(&col(|r| r.bias));
            let (mean_abs_bias, std_abs_bias) = mean_sd(&col(|r| r.bias.abs()));
            GroupSummary {
                experiment: key.0,
                m_p: key.1,
                repetitions: g.len(),
                mean_bias,
                bias_std_error: sd_bias / (g.len() as f64).sqrt(),
                mean_abs_bias,
                std_abs_bias,
                mean_gamma: mean_sd(&col(|r| r.gamma)).0,
                mean_p_hat: mean_sd(&col(|r| r.p_hat)).0,
                mean_m_es: mean_sd(&col(|r| r.m_es as f64)).0,
            }
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Domain("a log-log fit needs at least two positive points".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("log-log fit needs distinct x values".into()));
    }
    Ok(sxy / sxx)
}
