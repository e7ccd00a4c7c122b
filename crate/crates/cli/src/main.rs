use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sni::config::ExperimentConfig;
use sni::exec::{with_threads, Execution};
use sni::experiments::{self, BoundsArgs, CostCheck};
use sni::report::{summarize, ExperimentOutput};
use sni::{Error, Result};

/// Spacetime noise inversion: error-rate estimation, mitigation and the reduced-scale studies.
#[derive(Parser, Debug)]
#[command(name = "sni", version)]
struct Cli {
    /// Worker threads (0: one per core).
    #[arg(long, global = true, env = "SNI_THREADS", default_value_t = 0)]
    threads: usize,
    /// Run every Monte Carlo loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the CSV and JSON outputs.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the total error rate P of the error sampler.
    EstimateRate(RunArgs),
    /// Error-mitigated estimate with spacetime noise inversion.
    Mitigate(RunArgs),
    /// Conventional PEC with a sparse Pauli model fitted from spacetime error instances.
    Cpec(RunArgs),
    /// Bias bound, minimum sample counts and sampling-cost moments.
    Bounds {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        f: f64,
        /// Total error rate P.
        #[arg(long)]
        p: f64,
        /// Estimated rate P̂ for the bias bound and cost moments.
        #[arg(long)]
        p_hat: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        sup_norm: f64,
        /// M, for the cost moments.
        #[arg(long)]
        shots: Option<u64>,
        /// M_P, for the cost moments.
        #[arg(long)]
        rate_draws: Option<u64>,
    },
    /// Reduced-scale studies.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// SNI and cPEC bias against M_P under fluctuating noise.
    Fluctuating(RunArgs),
    /// SNI and cPEC bias under four-qubit correlated noise.
    Spatial(RunArgs),
    /// Empirical sampling-cost moments against their closed forms.
    CostCheck {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        repetitions: u32,
        #[arg(long, default_value_t = 2000)]
        shots: u64,
        #[arg(long, default_value_t = 1000)]
        rate_draws: u64,
    },
}

fn load(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn emit(output: &ExperimentOutput, out: Option<&Path>) -> Result<()> {
    println!("{:<22} {:>9} {:>5} {:>10} {:>10} {:>10} {:>10}", "experiment", "M_P", "reps", "mean bias", "std err", "mean |b|", "gamma");
    for g in summarize(&output.rows) {
        println!(
            "{:<22} {:>9} {:>5} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.4}",
            g.experiment, g.m_p, g.repetitions, g.mean_bias, g.bias_std_error, g.mean_abs_bias, g.mean_gamma
        );
    }
    if let Some(dir) = out {
        let (csv, json) = output.write(dir)?;
        eprintln!("wrote {} and {}", csv.display(), json.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::EstimateRate(args) => {
            let report = experiments::cmd_estimate_rate(load(&args)?, exec)?;
            println!(
                "P_hat={}\nM_P={}\nM_error={}\nP_exact={}",
                report.estimate.p_hat, report.estimate.m_p, report.estimate.m_error, report.exact
            );
            if let Some(dir) = &args.out {
                std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
                let path = dir.join("estimate-rate.json");
                let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?;
                std::fs::write(&path, text + "\n").map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Mitigate(args) => emit(&experiments::cmd_mitigate(load(&args)?, exec)?, args.out.as_deref())?,
        Command::Cpec(args) => emit(&experiments::cmd_cpec(load(&args)?, exec)?, args.out.as_deref())?,
        Command::Bounds { delta, f, p, p_hat, sup_norm, shots, rate_draws } => {
            print!("{}", experiments::cmd_bounds(&BoundsArgs { delta, f, p, p_hat, sup_norm, shots, rate_draws })?);
        }
        Command::Experiment(Experiment::Fluctuating(args)) => {
            emit(&experiments::experiment_fluctuating(load(&args)?, exec)?, args.out.as_deref())?
        }
        Command::Experiment(Experiment::Spatial(args)) => emit(&experiments::experiment_spatial(load(&args)?, exec)?, args.out.as_deref())?,
        Command::Experiment(Experiment::CostCheck { seed, out, repetitions, shots, rate_draws }) => {
            let output = experiments::experiment_cost_check(CostCheck { seed, repetitions, shots, rate_draws }, exec)?;
            println!("{}", serde_json::to_string_pretty(&output.summary).map_err(|e| Error::Config(e.to_string()))?);
            if let Some(dir) = out {
                let (csv, json) = output.write(&dir)?;
                eprintln!("wrote {} and {}", csv.display(), json.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads;
    let outcome = if threads == 0 { run(cli) } else { with_threads(threads, move || run(cli)) };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
