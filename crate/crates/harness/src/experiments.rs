//! Data-release, sweep, classification and accounting runs, and their reports.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use da_core::accounting::{delta_report, AccountingParams, DeltaReport};
use da_core::anonymity::{dp_kanonymity, k_anonymity};
use da_core::mechanisms::{
    cell_suppression, derive_seed, discrete_gaussian_mechanism, dp_cell_suppression, dp_swapping,
    laplace_mechanism, nonneg_project, seeded_rng, swapping, DpRng, MechanismConfig, MechanismKind,
};
use da_core::metrics::{empirical_summary, fairness_of, mean_and_se, Projection, ReleaseSummary};
use da_core::tabular::{build_histogram, Dataset, Histogram};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::train_weighted;
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Original microdata and its histogram.
#[derive(Debug, Clone)]
pub struct Workload {
    pub dataset: Dataset,
    pub hist: Histogram,
}

impl Workload {
    pub fn new(dataset: Dataset) -> Self {
        let hist = build_histogram(&dataset);
        Workload { dataset, hist }
    }

    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        Ok(Workload::new(config.data.load()?))
    }

    fn accounting_params(&self, config: &ExperimentConfig) -> AccountingParams {
        AccountingParams {
            b: self.hist.bound(),
            k: config.k,
            n_q: self.hist.schema().qi_universe_size(),
            beta: config.beta_override,
        }
    }
}

/// One run of `kind` on the workload, as a real-valued count vector.
/// Record-level mechanisms are re-aggregated into a histogram.
pub fn privatize(
    kind: MechanismKind,
    mc: &MechanismConfig,
    work: &Workload,
    rng: &mut DpRng,
) -> da_core::Result<Vec<f64>> {
    let (hist, data) = (&work.hist, &work.dataset);
    let out = match kind {
        MechanismKind::Laplace => laplace_mechanism(hist, mc.epsilon, rng)?,
        MechanismKind::DiscreteGaussian => discrete_gaussian_mechanism(hist, mc.epsilon, rng)?
            .into_iter()
            .map(|v| v as f64)
            .collect(),
        MechanismKind::CellSuppression => cell_suppression(hist, mc.k).as_f64(),
        MechanismKind::DpCellSuppression => dp_cell_suppression(hist, mc.k, mc.epsilon, rng, mc.cs_variant)?.as_f64(),
        MechanismKind::Swapping => build_histogram(&swapping(data, mc.swap_fraction, rng)?).as_f64(),
        MechanismKind::DpSwapping => dp_swapping(hist, mc.epsilon, rng)?.as_f64(),
        MechanismKind::KAnonymity => build_histogram(&k_anonymity(data, mc.k, rng)?).as_f64(),
        MechanismKind::DpKAnonymity => {
            build_histogram(&dp_kanonymity(data, mc.k, mc.epsilon, rng, mc.beta_override)?).as_f64()
        }
        MechanismKind::Identity => hist.as_f64(),
    };
    Ok(out)
}

/// Real-valued noise outputs are projected onto ℕ before any metric.
pub fn projection_for(kind: MechanismKind) -> Projection {
    match kind {
        MechanismKind::Laplace | MechanismKind::DiscreteGaussian => Projection::NonNegative,
        _ => Projection::Disabled,
    }
}

/// Base seed of the repetition stream for one (experiment, mechanism,
/// parameter) combination; repetition r uses base + r.
pub fn stream_seed(seed: u64, tags: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    tags.iter().fold(mix(seed), |acc, &t| mix(acc ^ t))
}

fn kind_tag(kind: MechanismKind) -> u64 {
    MechanismKind::ALL.iter().position(|&m| m == kind).unwrap_or(usize::MAX) as u64
}

/// Bias and error of `kind` over the configured repetitions.
pub fn summarize(
    kind: MechanismKind,
    mc: &MechanismConfig,
    work: &Workload,
    reps: usize,
    seed: u64,
) -> Result<ReleaseSummary> {
    Ok(empirical_summary(
        |_, rng| privatize(kind, mc, work, rng),
        &work.hist,
        reps,
        seed,
        projection_for(kind),
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseRow {
    pub mechanism: MechanismKind,
    /// `None` for the traditional methods, which take no budget.
    pub epsilon: Option<f64>,
    /// `None` where no closed form is available.
    pub delta: Option<f64>,
    pub bias_l1: f64,
    pub alpha: f64,
    pub mean_l1_error: f64,
    pub l1_error_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseReport {
    pub repetitions: usize,
    pub seed: u64,
    pub rows: Vec<ReleaseRow>,
}

/// The (mechanism, ε) grid: private mechanisms once per ε, the others once.
fn grid(kinds: &[MechanismKind], epsilons: &[f64]) -> Vec<(MechanismKind, Option<f64>)> {
    let mut out = Vec::new();
    for &kind in kinds {
        if kind.is_private() {
            out.extend(epsilons.iter().map(|&e| (kind, Some(e))));
        } else {
            out.push((kind, None));
        }
    }
    out
}

/// Budget used to configure a mechanism that ignores it.
const UNUSED_EPSILON: f64 = 1.0;

fn delta_for(kind: MechanismKind, epsilon: Option<f64>, params: &AccountingParams) -> Option<f64> {
    match delta_report(kind, epsilon.unwrap_or(UNUSED_EPSILON), params) {
        Ok(r) => r.delta,
        Err(e) => {
            log::warn!("no delta for {kind}: {e}");
            None
        }
    }
}

pub fn run_data_release(config: &ExperimentConfig, work: &Workload) -> Result<ReleaseReport> {
    config.validate()?;
    let params = work.accounting_params(config);
    let rows = grid(&config.mechanism_kinds()?, &config.epsilons)
        .into_iter()
        .map(|(kind, eps)| {
            let mc = config.mechanism_config(eps.unwrap_or(UNUSED_EPSILON));
            let seed = stream_seed(config.seed, &[1, kind_tag(kind), eps.unwrap_or(0.0).to_bits()]);
            let s = summarize(kind, &mc, work, config.repetitions, seed)?;
            Ok(ReleaseRow {
                mechanism: kind,
                epsilon: eps,
                delta: delta_for(kind, eps, &params),
                bias_l1: s.bias.l1,
                alpha: fairness_of(&s.bias)?.alpha,
                mean_l1_error: s.mean_l1_error,
                l1_error_se: s.l1_error_se,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ReleaseReport {
        repetitions: config.repetitions,
        seed: config.seed,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    CsThreshold,
    SwapFraction,
    KanonK,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 3] = [SweepAxis::CsThreshold, SweepAxis::SwapFraction, SweepAxis::KanonK];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::CsThreshold => "cs_threshold",
            SweepAxis::SwapFraction => "swap_fraction",
            SweepAxis::KanonK => "kanon_k",
        }
    }

    /// The traditional mechanism on this axis and its private counterpart.
    pub fn mechanisms(self) -> (MechanismKind, MechanismKind) {
        match self {
            SweepAxis::CsThreshold => (MechanismKind::CellSuppression, MechanismKind::DpCellSuppression),
            SweepAxis::SwapFraction => (MechanismKind::Swapping, MechanismKind::DpSwapping),
            SweepAxis::KanonK => (MechanismKind::KAnonymity, MechanismKind::DpKAnonymity),
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown sweep axis {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub axis_value: f64,
    pub mechanism: MechanismKind,
    pub epsilon: Option<f64>,
    pub mean_l1_error: f64,
    pub l1_error_se: f64,
    pub alpha: f64,
}

/// ℓ1 error and α along one axis, for the traditional mechanism and its
/// private counterpart at every configured ε.
pub fn run_sweep(config: &ExperimentConfig, work: &Workload, axis: SweepAxis) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let values: Vec<f64> = match axis {
        SweepAxis::SwapFraction => config.swap_fractions.clone(),
        _ => config.ks.iter().map(|&k| k as f64).collect(),
    };
    let (traditional, private) = axis.mechanisms();
    let mut rows = Vec::new();
    for &v in &values {
        let mut base = config.clone();
        match axis {
            SweepAxis::SwapFraction => base.swap_fraction = v,
            _ => base.k = v as u64,
        }
        let combos = std::iter::once((traditional, None)).chain(config.epsilons.iter().map(|&e| (private, Some(e))));
        for (kind, eps) in combos {
            let mc = base.mechanism_config(eps.unwrap_or(UNUSED_EPSILON));
            let seed = stream_seed(
                config.seed,
                &[2, kind_tag(kind), v.to_bits(), eps.unwrap_or(0.0).to_bits()],
            );
            let s = summarize(kind, &mc, work, config.repetitions, seed)?;
            rows.push(SweepRow {
                axis,
                axis_value: v,
                mechanism: kind,
                epsilon: eps,
                mean_l1_error: s.mean_l1_error,
                l1_error_se: s.l1_error_se,
                alpha: fairness_of(&s.bias)?.alpha,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRow {
    /// A mechanism name, or `baseline` for training on the original data.
    pub mechanism: String,
    pub epsilon: Option<f64>,
    pub mean_accuracy: f64,
    pub accuracy_se: f64,
}

/// Accuracy on the original records of a model trained on each release.
pub fn run_classification(config: &ExperimentConfig, work: &Workload) -> Result<Vec<ClassifyRow>> {
    config.validate()?;
    let schema = work.hist.schema();
    let hp = &config.classifier;
    let baseline = train_weighted(schema, &work.hist.as_f64(), &config.label, &config.features, hp)?;
    let mut rows = vec![ClassifyRow {
        mechanism: "baseline".into(),
        epsilon: None,
        mean_accuracy: baseline.accuracy(&work.hist),
        accuracy_se: 0.0,
    }];
    for (kind, eps) in grid(&config.mechanism_kinds()?, &config.epsilons) {
        let mc = config.mechanism_config(eps.unwrap_or(UNUSED_EPSILON));
        let seed = stream_seed(config.seed, &[3, kind_tag(kind), eps.unwrap_or(0.0).to_bits()]);
        let accuracies: Vec<f64> = (0..config.repetitions)
            .into_par_iter()
            .map(|r| {
                let mut rng = seeded_rng(derive_seed(seed, r as u64));
                let released = privatize(kind, &mc, work, &mut rng)?;
                let weights: Vec<f64> = match projection_for(kind) {
                    Projection::NonNegative => nonneg_project(&released).into_iter().map(|v| v as f64).collect(),
                    Projection::Disabled => released,
                };
                let model = train_weighted(schema, &weights, &config.label, &config.features, hp)?;
                Ok(model.accuracy(&work.hist))
            })
            .collect::<Result<_>>()?;
        let (mean_accuracy, accuracy_se) = mean_and_se(&accuracies);
        rows.push(ClassifyRow {
            mechanism: kind.name().into(),
            epsilon: eps,
            mean_accuracy,
            accuracy_se,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountingRow {
    pub mechanism: MechanismKind,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub parameters: BTreeMap<String, f64>,
}

/// Closed-form δ for every configured (mechanism, ε) on this workload.
pub fn run_accounting(config: &ExperimentConfig, work: &Workload) -> Result<Vec<AccountingRow>> {
    config.validate()?;
    let params = work.accounting_params(config);
    let mut out = Vec::new();
    for (kind, eps) in grid(&config.mechanism_kinds()?, &config.epsilons) {
        match delta_report(kind, eps.unwrap_or(UNUSED_EPSILON), &params) {
            Ok(DeltaReport { delta, parameters, .. }) => out.push(AccountingRow {
                mechanism: kind,
                epsilon: eps,
                delta,
                parameters,
            }),
            Err(e) => log::warn!("no delta for {kind}: {e}"),
        }
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn create(dir: &Path, name: &str) -> Result<fs::File> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    fs::File::create(&path).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut f = create(dir, name)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f).map_err(|e| Error::io(dir.join(name), e))
}

pub fn write_release_csv<W: Write>(report: &ReleaseReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mechanism", "epsilon", "delta", "bias_l1", "alpha", "mean_l1_error", "l1_error_se"])?;
    for r in &report.rows {
        w.write_record([
            r.mechanism.name().to_string(),
            opt(r.epsilon),
            opt(r.delta),
            r.bias_l1.to_string(),
            r.alpha.to_string(),
            r.mean_l1_error.to_string(),
            r.l1_error_se.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["axis", "axis_value", "mechanism", "epsilon", "mean_l1_error", "l1_error_se", "alpha"])?;
    for r in rows {
        w.write_record([
            r.axis.name().to_string(),
            r.axis_value.to_string(),
            r.mechanism.name().to_string(),
            opt(r.epsilon),
            r.mean_l1_error.to_string(),
            r.l1_error_se.to_string(),
            r.alpha.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn write_classify_csv<W: Write>(rows: &[ClassifyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mechanism", "epsilon", "mean_accuracy", "accuracy_se"])?;
    for r in rows {
        w.write_record([
            r.mechanism.clone(),
            opt(r.epsilon),
            r.mean_accuracy.to_string(),
            r.accuracy_se.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// `release.csv` and `release.json`.
pub fn save_release(report: &ReleaseReport, dir: &Path) -> Result<()> {
    write_release_csv(report, create(dir, "release.csv")?)?;
    write_json(dir, "release.json", report)
}

/// `sweep_<axis>.csv` and `sweep_<axis>.json`.
pub fn save_sweep(rows: &[SweepRow], axis: SweepAxis, dir: &Path) -> Result<()> {
    write_sweep_csv(rows, create(dir, &format!("sweep_{}.csv", axis.name()))?)?;
    write_json(dir, &format!("sweep_{}.json", axis.name()), &rows)
}

/// `classify.csv` and `classify.json`.
pub fn save_classification(rows: &[ClassifyRow], dir: &Path) -> Result<()> {
    write_classify_csv(rows, create(dir, "classify.csv")?)?;
    write_json(dir, "classify.json", &rows)
}

pub fn save_accounting(reports: &[AccountingRow], dir: &Path) -> Result<()> {
    write_json(dir, "accounting.json", &reports)
}
