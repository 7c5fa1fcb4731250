use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use da_core::accounting::{delta_report, enumerable_mechanism, verify_dp_bruteforce, AccountingParams, VerifyMode};
use da_core::mechanisms::{MechanismConfig, MechanismKind};
use da_core::tabular::{Attribute, Schema};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::experiments::{self, SweepAxis, Workload};
use crate::synth;

#[derive(Debug, Parser)]
#[command(name = "da-toolkit", version, about = "Compare disclosure-avoidance mechanisms on histogram releases")]
pub struct Cli {
    /// Experiment config (TOML or JSON). Defaults apply without one.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Privacy budgets, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps: Vec<f64>,
    #[arg(long, global = true)]
    pub k: Option<u64>,
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Output directory (a file path for `synth-data`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bias, α-fairness and δ of every configured mechanism.
    Release,
    /// ℓ1 error and α along a parameter axis.
    Sweep {
        /// cs_threshold, swap_fraction, kanon_k or all.
        #[arg(long, default_value = "all")]
        axis: String,
    },
    /// Accuracy of classifiers trained on each release.
    Classify,
    /// Closed-form δ values.
    Accounting {
        #[arg(long = "n-q", default_value_t = 9)]
        n_q: usize,
        /// Largest histogram count B.
        #[arg(long, default_value_t = 200)]
        b: u64,
        /// Subsampling rate; 1 − e^(−ε) when absent.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Exhaustive privacy-loss check on a tiny single-attribute universe.
    VerifyDp {
        #[arg(long, default_value = "dp_cell_suppression")]
        mechanism: String,
        /// Universe size.
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long = "max-count", default_value_t = 3)]
        max_count: u64,
        /// Monte-Carlo draws per neighbouring pair; 0 enumerates exactly.
        #[arg(long, default_value_t = 0)]
        samples: usize,
    },
    /// Writes the synthetic ACS-like CSV.
    SynthData {
        #[arg(long, default_value_t = synth::BUNDLED_ROWS)]
        rows: usize,
    },
}

/// Parses `argv` and runs it; returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli, &mut std::io::stdout().lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn experiment_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if !cli.eps.is_empty() {
        cfg.epsilons = cli.eps.clone();
    }
    if let Some(k) = cli.k {
        cfg.k = k;
    }
    if let Some(reps) = cli.reps {
        cfg.repetitions = reps;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Release => {
            let cfg = experiment_config(cli)?;
            let work = Workload::load(&cfg)?;
            let report = experiments::run_data_release(&cfg, &work)?;
            experiments::save_release(&report, &cfg.output_dir)?;
            experiments::save_accounting(&experiments::run_accounting(&cfg, &work)?, &cfg.output_dir)?;
            experiments::write_release_csv(&report, &mut *out)?;
        }
        Command::Sweep { axis } => {
            let cfg = experiment_config(cli)?;
            let axes = if axis == "all" {
                SweepAxis::ALL.to_vec()
            } else {
                vec![SweepAxis::from_str(axis)?]
            };
            let work = Workload::load(&cfg)?;
            for axis in axes {
                let rows = experiments::run_sweep(&cfg, &work, axis)?;
                experiments::save_sweep(&rows, axis, &cfg.output_dir)?;
                experiments::write_sweep_csv(&rows, &mut *out)?;
            }
        }
        Command::Classify => {
            let cfg = experiment_config(cli)?;
            let work = Workload::load(&cfg)?;
            let rows = experiments::run_classification(&cfg, &work)?;
            experiments::save_classification(&rows, &cfg.output_dir)?;
            experiments::write_classify_csv(&rows, &mut *out)?;
        }
        Command::Accounting { n_q, b, beta } => accounting(cli, *n_q, *b, *beta, out)?,
        Command::VerifyDp {
            mechanism,
            n,
            max_count,
            samples,
        } => verify(cli, mechanism, *n, *max_count, *samples, out)?,
        Command::SynthData { rows } => {
            let csv = synth::synthetic_csv(*rows, cli.seed.unwrap_or(synth::BUNDLED_SEED))?;
            match &cli.out {
                Some(path) => write_file(path, &csv)?,
                None => out.write_all(&csv).map_err(io_err)?,
            }
        }
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

const TABLE_EPSILONS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

fn accounting(cli: &Cli, n_q: usize, b: u64, beta: Option<f64>, out: &mut dyn Write) -> Result<()> {
    let epsilons = if cli.eps.is_empty() { TABLE_EPSILONS.to_vec() } else { cli.eps.clone() };
    let params = AccountingParams {
        b,
        k: cli.k.unwrap_or(6),
        n_q,
        beta,
    };
    let kinds = [
        MechanismKind::Laplace,
        MechanismKind::DpCellSuppression,
        MechanismKind::DpSwapping,
        MechanismKind::DpKAnonymity,
    ];
    let mut reports = Vec::new();
    for &eps in &epsilons {
        for kind in kinds {
            let r = delta_report(kind, eps, &params).map_err(|e| Error::Config(e.to_string()))?;
            let detail: Vec<String> = r.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
            writeln!(
                out,
                "{kind} eps={eps} {} delta = {:.3}",
                detail.join(" "),
                r.delta.unwrap_or(f64::NAN)
            )
            .map_err(io_err)?;
            reports.push(r);
        }
    }
    if let Some(dir) = &cli.out {
        let json = serde_json::to_vec_pretty(&reports)?;
        write_file(&dir.join("accounting.json"), &json)?;
    }
    Ok(())
}

fn verify(cli: &Cli, mechanism: &str, n: usize, max_count: u64, samples: usize, out: &mut dyn Write) -> Result<()> {
    let kind = MechanismKind::from_str(mechanism).map_err(|e| Error::Config(e.to_string()))?;
    let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let schema = Arc::new(
        Schema::new(vec![Attribute::categorical("Q", labels).quasi_identifier()])
            .map_err(|e| Error::Config(e.to_string()))?,
    );
    let epsilons = if cli.eps.is_empty() { vec![1.0] } else { cli.eps.clone() };
    let mode = match samples {
        0 => VerifyMode::Exact,
        s => VerifyMode::Sampled {
            samples: s,
            seed: cli.seed.unwrap_or(0),
        },
    };
    let mut reports = Vec::new();
    for eps in epsilons {
        let mc = MechanismConfig {
            epsilon: eps,
            k: cli.k.unwrap_or(2),
            ..MechanismConfig::default()
        };
        let m = enumerable_mechanism(kind, &mc).map_err(|e| Error::Config(e.to_string()))?;
        let r = verify_dp_bruteforce(m.as_ref(), &schema, eps, max_count, mode)
            .map_err(|e| Error::Config(e.to_string()))?;
        writeln!(
            out,
            "{kind} eps={eps} delta_hat = {:.6} (se {:.6}) tight_delta = {:.6} pairs = {}",
            r.delta_hat, r.standard_error, r.tight_delta, r.pairs_checked
        )
        .map_err(io_err)?;
        reports.push(r);
    }
    if let Some(dir) = &cli.out {
        write_file(&dir.join("verify_dp.json"), &serde_json::to_vec_pretty(&reports)?)?;
    }
    Ok(())
}
