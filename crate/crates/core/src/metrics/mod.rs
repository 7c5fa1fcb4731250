//! Bias vectors (closed form and Monte-Carlo), their bounds, and α-fairness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{check_epsilon, check_k, derive_seed, nonneg_project, seeded_rng, DpRng};
use crate::tabular::{GroupIndex, Histogram};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BiasMode {
    Analytic,
    Empirical { repetitions: usize, seed: u64 },
}

/// 𝓑(M)ᵢ = E[M(D)ᵢ] − xᵢ for every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasVector {
    pub per_cell: Vec<f64>,
    pub l1: f64,
    pub mode: BiasMode,
    /// Per-cell Monte-Carlo standard errors, empirical mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standard_errors: Option<Vec<f64>>,
}

impl BiasVector {
    pub fn analytic(per_cell: Vec<f64>) -> Self {
        BiasVector {
            l1: per_cell.iter().map(|b| b.abs()).sum(),
            per_cell,
            mode: BiasMode::Analytic,
            standard_errors: None,
        }
    }

    pub fn empirical(per_cell: Vec<f64>, standard_errors: Vec<f64>, repetitions: usize, seed: u64) -> Self {
        BiasVector {
            l1: per_cell.iter().map(|b| b.abs()).sum(),
            per_cell,
            mode: BiasMode::Empirical { repetitions, seed },
            standard_errors: Some(standard_errors),
        }
    }
}

/// α = max − min of a bias vector, with the cells attaining both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub alpha: f64,
    pub argmax_cell: usize,
    pub argmin_cell: usize,
}

pub fn fairness_of(bias: &BiasVector) -> Result<FairnessReport> {
    fairness_of_values(&bias.per_cell)
}

pub fn fairness_of_values(values: &[f64]) -> Result<FairnessReport> {
    if values.is_empty() {
        return Err(Error::Structure("fairness of an empty bias vector".into()));
    }
    let (mut hi, mut lo) = (0, 0);
    for (i, &v) in values.iter().enumerate() {
        if v > values[hi] {
            hi = i;
        }
        if v < values[lo] {
            lo = i;
        }
    }
    Ok(FairnessReport {
        alpha: values[hi] - values[lo],
        argmax_cell: hi,
        argmin_cell: lo,
    })
}

/// Whether releases are projected onto the non-negative integers before the
/// bias is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    NonNegative,
    Disabled,
}

/// Bias and ℓ1 error of `release` estimated from the same runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseSummary {
    pub bias: BiasVector,
    pub mean_l1_error: f64,
    pub l1_error_se: f64,
}

fn release_runs<F>(release: &F, hist: &Histogram, reps: usize, seed: u64, projection: Projection) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&Histogram, &mut DpRng) -> Result<Vec<f64>> + Sync,
{
    if reps == 0 {
        return Err(Error::Parameter("at least one repetition is needed".into()));
    }
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeded_rng(derive_seed(seed, r as u64));
            let out = release(hist, &mut rng)?;
            if out.len() != hist.len() {
                return Err(Error::Structure(format!(
                    "release has {} cells, histogram has {}",
                    out.len(),
                    hist.len()
                )));
            }
            Ok(match projection {
                Projection::NonNegative => nonneg_project(&out).into_iter().map(|v| v as f64).collect(),
                Projection::Disabled => out,
            })
        })
        .collect()
}

fn bias_from_runs(runs: &[Vec<f64>], hist: &Histogram, seed: u64) -> BiasVector {
    let (n, reps) = (hist.len(), runs.len());
    let mut mean = vec![0.0; n];
    for run in runs {
        for (m, (&v, &x)) in mean.iter_mut().zip(run.iter().zip(hist.counts())) {
            *m += v - x as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= reps as f64);
    let mut se = vec![0.0; n];
    if reps > 1 {
        for run in runs {
            for (i, s) in se.iter_mut().enumerate() {
                let d = run[i] - hist.counts()[i] as f64 - mean[i];
                *s += d * d;
            }
        }
        se.iter_mut()
            .for_each(|s| *s = (*s / (reps - 1) as f64).sqrt() / (reps as f64).sqrt());
    }
    BiasVector::empirical(mean, se, reps, seed)
}

/// Monte-Carlo bias of `release` over `reps` runs seeded `seed + r`.
/// Repetitions run in parallel; the reduction is sequential, so the result
/// does not depend on the thread count.
pub fn empirical_bias<F>(release: F, hist: &Histogram, reps: usize, seed: u64, projection: Projection) -> Result<BiasVector>
where
    F: Fn(&Histogram, &mut DpRng) -> Result<Vec<f64>> + Sync,
{
    let runs = release_runs(&release, hist, reps, seed, projection)?;
    Ok(bias_from_runs(&runs, hist, seed))
}

/// [`empirical_bias`] together with the mean ℓ1 error of the same runs.
pub fn empirical_summary<F>(release: F, hist: &Histogram, reps: usize, seed: u64, projection: Projection) -> Result<ReleaseSummary>
where
    F: Fn(&Histogram, &mut DpRng) -> Result<Vec<f64>> + Sync,
{
    let runs = release_runs(&release, hist, reps, seed, projection)?;
    let errors: Vec<f64> = runs.iter().map(|run| hist.l1_distance(run)).collect();
    let (mean_l1_error, l1_error_se) = mean_and_se(&errors);
    Ok(ReleaseSummary {
        bias: bias_from_runs(&runs, hist, seed),
        mean_l1_error,
        l1_error_se,
    })
}

/// Mean ℓ1 error E‖M(D) − x‖₁ with its standard error, over `reps` seeded runs.
pub fn empirical_l1_error<F>(release: F, hist: &Histogram, reps: usize, seed: u64) -> Result<(f64, f64)>
where
    F: Fn(&Histogram, &mut DpRng) -> Result<Vec<f64>> + Sync,
{
    if reps == 0 {
        return Err(Error::Parameter("at least one repetition is needed".into()));
    }
    let errors: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeded_rng(derive_seed(seed, r as u64));
            release(hist, &mut rng).map(|out| hist.l1_distance(&out))
        })
        .collect::<Result<_>>()?;
    Ok(mean_and_se(&errors))
}

/// Sample mean and its standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// pᵢ = Pr[xᵢ + Lap(2/ε) < k], the chance a cell is suppressed.
pub fn suppression_probability(x: u64, k: u64, epsilon: f64) -> f64 {
    let gap = k as f64 - x as f64;
    if x < k {
        1.0 - 0.5 * (-epsilon * gap / 2.0).exp()
    } else {
        0.5 * (epsilon * gap / 2.0).exp()
    }
}

/// (k/2 − xᵢ)·pᵢ per cell, with the real-valued k/2.
pub fn analytic_bias_cs(hist: &Histogram, k: u64, epsilon: f64) -> Result<BiasVector> {
    check_k(k)?;
    check_epsilon(epsilon)?;
    let half = k as f64 / 2.0;
    Ok(BiasVector::analytic(
        hist.counts()
            .iter()
            .map(|&x| (half - x as f64) * suppression_probability(x, k, epsilon))
            .collect(),
    ))
}

/// ‖k/2·𝟏 − x‖₂·‖p‖₂, the Cauchy-Schwarz bound on ‖𝓑‖₁ for private suppression.
pub fn cs_bias_bound(hist: &Histogram, k: u64, epsilon: f64) -> Result<f64> {
    check_k(k)?;
    check_epsilon(epsilon)?;
    let half = k as f64 / 2.0;
    let gap: f64 = hist.counts().iter().map(|&x| (half - x as f64).powi(2)).sum();
    let p: f64 = hist
        .counts()
        .iter()
        .map(|&x| suppression_probability(x, k, epsilon).powi(2))
        .sum();
    Ok(gap.sqrt() * p.sqrt())
}

fn check_groups(hist: &Histogram, groups: &GroupIndex) -> Result<usize> {
    let n_q = hist.schema().qi_universe_size();
    if groups.num_cells() != hist.len() {
        return Err(Error::Structure(format!(
            "group index covers {} cells, histogram has {}",
            groups.num_cells(),
            hist.len()
        )));
    }
    if let Some(g) = groups.groups().iter().find(|g| g.len() != n_q) {
        return Err(Error::Structure(format!(
            "a group has {} cells but n_Q = {n_q}",
            g.len()
        )));
    }
    Ok(n_q)
}

/// (Σ_{j∈ℐᵢ} xⱼ − n_Q·xᵢ)/(e^ε + n_Q − 1) per cell.
pub fn analytic_bias_swap(hist: &Histogram, groups: &GroupIndex, epsilon: f64) -> Result<BiasVector> {
    let n_q = check_groups(hist, groups)? as f64;
    let denom = epsilon.exp() + n_q - 1.0;
    let x = hist.counts();
    Ok(BiasVector::analytic(
        (0..hist.len())
            .map(|i| {
                let group_mass: u64 = groups.group_of(i).iter().map(|&j| x[j]).sum();
                (group_mass as f64 - n_q * x[i] as f64) / denom
            })
            .collect(),
    ))
}

/// Mean absolute deviation from the mean.
pub fn mad(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).abs()).sum::<f64>() / values.len() as f64
}

/// n_Q/(e^ε + n_Q − 1)·Σᵢ MAD(x_{ℐᵢ}), the ℓ1 norm of the swapping bias
/// written through group mean absolute deviations.
pub fn swap_bias_l1_via_mad(hist: &Histogram, groups: &GroupIndex, epsilon: f64) -> Result<f64> {
    let n_q = check_groups(hist, groups)? as f64;
    let x = hist.counts();
    let total: f64 = groups
        .groups()
        .iter()
        .map(|g| {
            let values: Vec<f64> = g.iter().map(|&j| x[j] as f64).collect();
            // every cell of the group contributes the same MAD
            g.len() as f64 * mad(&values)
        })
        .sum();
    Ok(n_q / (epsilon.exp() + n_q - 1.0) * total)
}

fn ln_choose(n: u64, j: u64) -> f64 {
    fn ln_fact(n: u64) -> f64 {
        (1..=n).map(|i| (i as f64).ln()).sum()
    }
    ln_fact(n) - ln_fact(j) - ln_fact(n - j)
}

/// Bias of the "merged" indicator of a cell with `x` records after
/// Bernoulli(β) subsampling and k-anonymization:
/// Σ_{j=x−k+1}^{x} C(x,j)·β^{x−j}(1−β)^j for x ≥ k, else 0.
pub fn analytic_bias_kanon_flag(x: u64, k: u64, beta: f64) -> Result<f64> {
    check_k(k)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Parameter(format!("beta must lie in (0, 1), got {beta}")));
    }
    if x < k {
        return Ok(0.0);
    }
    let (lb, lq) = (beta.ln(), (-beta).ln_1p());
    Ok((x - k + 1..=x)
        .map(|j| (ln_choose(x, j) + (x - j) as f64 * lb + j as f64 * lq).exp())
        .sum::<f64>()
        .min(1.0))
}

fn extremes(hist: &Histogram) -> Result<(u64, u64)> {
    if hist.is_empty() {
        return Err(Error::Structure("empty histogram".into()));
    }
    Ok((hist.min_count(), hist.bound()))
}

/// (xₙ − x₁)p₁ + max{|k/2 − x₁|, |k/2 − xₙ|}(p₁ − pₙ).
pub fn alpha_bound_cs(hist: &Histogram, k: u64, epsilon: f64) -> Result<f64> {
    check_k(k)?;
    check_epsilon(epsilon)?;
    let (x1, xn) = extremes(hist)?;
    let p1 = suppression_probability(x1, k, epsilon);
    let pn = suppression_probability(xn, k, epsilon);
    let half = k as f64 / 2.0;
    let spread = (half - x1 as f64).abs().max((half - xn as f64).abs());
    Ok((xn - x1) as f64 * p1 + spread * (p1 - pn))
}

/// 2n_Q/(e^ε + n_Q − 1)·(xₙ − x₁).
pub fn alpha_bound_swap(hist: &Histogram, n_q: usize, epsilon: f64) -> Result<f64> {
    if n_q == 0 {
        return Err(Error::Parameter("n_Q must be at least 1".into()));
    }
    let (x1, xn) = extremes(hist)?;
    let n_q = n_q as f64;
    Ok(2.0 * n_q / (epsilon.exp() + n_q - 1.0) * (xn - x1) as f64)
}

/// e^(−εx₁/2)/2·(xₙ − x₁), the bound for Laplace followed by projection.
pub fn alpha_bound_laplace(hist: &Histogram, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let (x1, xn) = extremes(hist)?;
    Ok((-epsilon * x1 as f64 / 2.0).exp() / 2.0 * (xn - x1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    /// 2 ≤ x₁ ≤ k
    pub precondition_met: bool,
    pub alpha_laplace: f64,
    pub alpha_cs: f64,
    pub alpha_swap: f64,
    /// α_Lap ≤ α_CS and α_Lap ≤ α_SW; `None` when the precondition fails.
    pub holds: Option<bool>,
}

/// Compares the three α bounds when 2 ≤ x₁ ≤ k.
pub fn fairness_dominance_check(hist: &Histogram, k: u64, n_q: usize, epsilon: f64) -> Result<DominanceReport> {
    let alpha_laplace = alpha_bound_laplace(hist, epsilon)?;
    let alpha_cs = alpha_bound_cs(hist, k, epsilon)?;
    let alpha_swap = alpha_bound_swap(hist, n_q, epsilon)?;
    let x1 = hist.min_count();
    let precondition_met = 2 <= x1 && x1 <= k;
    Ok(DominanceReport {
        precondition_met,
        alpha_laplace,
        alpha_cs,
        alpha_swap,
        holds: precondition_met.then_some(alpha_laplace <= alpha_cs && alpha_laplace <= alpha_swap),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{Attribute, Schema};
    use std::sync::Arc;

    fn hist(counts: Vec<u64>) -> Histogram {
        let labels: Vec<String> = (0..counts.len()).map(|i| i.to_string()).collect();
        let schema = Arc::new(Schema::new(vec![Attribute::categorical("Q", labels).quasi_identifier()]).unwrap());
        Histogram::from_counts(schema, counts).unwrap()
    }

    #[test]
    fn suppression_bias_values() {
        assert_eq!(suppression_probability(6, 6, 1.0), 0.5);
        let b = analytic_bias_cs(&hist(vec![2, 6, 10]), 6, 1.0).unwrap();
        assert!((b.per_cell[0] - (1.0 - 0.5 * (-2f64).exp())).abs() < 1e-12);
        assert!((b.per_cell[0] - 0.9323).abs() < 1e-4);
        assert_eq!(b.per_cell[1], -1.5);
    }

    #[test]
    fn swap_bias_on_one_group() {
        let h = hist(vec![2, 4, 6]);
        let groups = GroupIndex::new(h.schema());
        let b = analytic_bias_swap(&h, &groups, 0.0).unwrap();
        for (got, want) in b.per_cell.iter().zip([2.0, 0.0, -2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((b.l1 - 4.0).abs() < 1e-12);
        assert!((swap_bias_l1_via_mad(&h, &groups, 0.0).unwrap() - 4.0).abs() < 1e-12);
        let flat = analytic_bias_swap(&hist(vec![5, 5, 5]), &groups, 1.0).unwrap();
        assert!(flat.per_cell.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_groups_are_rejected() {
        let h = hist(vec![1, 2, 3]);
        let groups = GroupIndex::from_groups(vec![vec![0, 1], vec![2]], 3).unwrap();
        assert!(matches!(analytic_bias_swap(&h, &groups, 1.0), Err(Error::Structure(_))));
    }

    #[test]
    fn kanon_flag_values() {
        assert_eq!(analytic_bias_kanon_flag(5, 6, 0.3).unwrap(), 0.0);
        assert!((analytic_bias_kanon_flag(1, 1, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((analytic_bias_kanon_flag(2, 1, 0.5).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn alpha_bounds() {
        let h = hist(vec![2, 6, 10]);
        let p2 = 1.0 - 0.5 * (-2f64).exp();
        let p10 = 0.5 * (-2f64).exp();
        let want = 8.0 * p2 + 7.0 * (p2 - p10);
        assert!((alpha_bound_cs(&h, 6, 1.0).unwrap() - want).abs() < 1e-12);
        assert!((alpha_bound_swap(&hist(vec![0, 10]), 9, 1.0).unwrap() - 180.0 / (1f64.exp() + 8.0)).abs() < 1e-12);
        assert!((alpha_bound_laplace(&hist(vec![2, 10]), 1.0).unwrap() - 4.0 * (-1f64).exp()).abs() < 1e-12);
        for b in [
            alpha_bound_cs(&hist(vec![4, 4]), 6, 1.0).unwrap(),
            alpha_bound_swap(&hist(vec![4, 4]), 3, 1.0).unwrap(),
            alpha_bound_laplace(&hist(vec![4, 4]), 1.0).unwrap(),
        ] {
            assert_eq!(b, 0.0);
        }
    }

    #[test]
    fn dominance_precondition() {
        let r = fairness_dominance_check(&hist(vec![2, 6, 10]), 6, 9, 1.0).unwrap();
        assert_eq!(r.holds, Some(true));
        let r = fairness_dominance_check(&hist(vec![1, 6, 10]), 6, 9, 1.0).unwrap();
        assert!(!r.precondition_met);
        assert_eq!(r.holds, None);
    }

    #[test]
    fn fairness_values() {
        let f = fairness_of_values(&[-2.0, 0.0, 2.0]).unwrap();
        assert_eq!((f.alpha, f.argmax_cell, f.argmin_cell), (4.0, 2, 0));
        assert_eq!(fairness_of_values(&[0.0; 4]).unwrap().alpha, 0.0);
        assert!(fairness_of_values(&[]).is_err());
    }

    #[test]
    fn identity_release_has_no_bias() {
        let h = hist(vec![3, 0, 7]);
        let b = empirical_bias(|h, _| Ok(h.as_f64()), &h, 5, 1, Projection::Disabled).unwrap();
        assert_eq!(b.per_cell, vec![0.0; 3]);
        assert_eq!(b.l1, 0.0);
    }

    #[test]
    fn summary_shares_runs_with_bias() {
        let h = hist(vec![1, 4, 9]);
        let shift = |h: &Histogram, _: &mut DpRng| Ok(h.as_f64().iter().map(|v| v + 2.0).collect());
        let s = empirical_summary(shift, &h, 4, 3, Projection::Disabled).unwrap();
        assert_eq!(s.bias.per_cell, vec![2.0; 3]);
        assert_eq!(s.mean_l1_error, 6.0);
        assert_eq!(s.l1_error_se, 0.0);
        assert!(empirical_summary(shift, &h, 0, 3, Projection::Disabled).is_err());
    }
}
