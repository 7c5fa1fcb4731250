use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{
    check_epsilon, derive_seed, dp_cell_suppression, dp_swapping, retention_probability, seeded_rng, DpRng,
    MechanismConfig, MechanismKind, SuppressionVariant,
};
use crate::tabular::{adjacent_histograms, Histogram, Schema};

/// A released histogram, as a count vector.
pub type Outcome = Vec<u64>;

/// A mechanism on tiny universes whose output law can be written down.
pub trait EnumerableMechanism: Send + Sync {
    fn name(&self) -> String;

    /// Every outcome with positive probability, and that probability.
    fn outcome_distribution(&self, hist: &Histogram) -> HashMap<Outcome, f64>;

    /// One draw from the mechanism itself.
    fn sample_outcome(&self, hist: &Histogram, rng: &mut DpRng) -> Outcome;
}

/// Pr[x + Lap(2/ε) ≥ k]
fn pass_probability(x: u64, k: u64, epsilon: f64) -> f64 {
    let t = k as f64 - x as f64;
    let b = 2.0 / epsilon;
    if t <= 0.0 {
        1.0 - 0.5 * (t / b).exp()
    } else {
        0.5 * (-t / b).exp()
    }
}

/// Product of independent per-cell outcome laws.
fn product(per_cell: &[Vec<(u64, f64)>]) -> HashMap<Outcome, f64> {
    let mut dist: HashMap<Outcome, f64> = HashMap::from([(Vec::new(), 1.0)]);
    for choices in per_cell {
        let mut next = HashMap::new();
        for (prefix, p) in &dist {
            for &(v, q) in choices {
                if q == 0.0 {
                    continue;
                }
                let mut o = prefix.clone();
                o.push(v);
                *next.entry(o).or_insert(0.0) += p * q;
            }
        }
        dist = next;
    }
    dist
}

/// Per-cell-noise private suppression with the ⌊k/2⌋ fill.
#[derive(Debug, Clone, Copy)]
pub struct DpCellSuppression {
    pub k: u64,
    pub epsilon: f64,
}

impl EnumerableMechanism for DpCellSuppression {
    fn name(&self) -> String {
        format!("dp_cell_suppression(k={}, eps={})", self.k, self.epsilon)
    }

    fn outcome_distribution(&self, hist: &Histogram) -> HashMap<Outcome, f64> {
        let per_cell: Vec<Vec<(u64, f64)>> = hist
            .counts()
            .iter()
            .map(|&x| {
                let keep = pass_probability(x, self.k, self.epsilon);
                vec![(x, keep), (self.k / 2, 1.0 - keep)]
            })
            .collect();
        product(&per_cell)
    }

    fn sample_outcome(&self, hist: &Histogram, rng: &mut DpRng) -> Outcome {
        dp_cell_suppression(hist, self.k, self.epsilon, rng, SuppressionVariant::PerCellNoise)
            .expect("validated parameters")
            .into_counts()
    }
}

/// Private swapping; each record keeps its QI tuple with probability γ.
#[derive(Debug, Clone, Copy)]
pub struct DpSwapping {
    pub epsilon: f64,
}

impl EnumerableMechanism for DpSwapping {
    fn name(&self) -> String {
        format!("dp_swapping(eps={})", self.epsilon)
    }

    fn outcome_distribution(&self, hist: &Histogram) -> HashMap<Outcome, f64> {
        let schema = hist.schema();
        let n_q = schema.qi_universe_size();
        let n = hist.len();
        let mut dist: HashMap<Outcome, f64> = HashMap::from([(vec![0; n], 1.0)]);
        let keep = retention_probability(self.epsilon, n_q);
        let moved = if n_q > 1 { (1.0 - keep) / (n_q - 1) as f64 } else { 0.0 };
        for (cell, &count) in hist.counts().iter().enumerate() {
            let q = schema.qi_index(cell);
            for _ in 0..count {
                let mut next = HashMap::new();
                for (o, p) in &dist {
                    for q_new in 0..n_q {
                        let step = if q_new == q { keep } else { moved };
                        if step == 0.0 {
                            continue;
                        }
                        let mut o = o.clone();
                        o[schema.with_qi_index(cell, q_new)] += 1;
                        *next.entry(o).or_insert(0.0) += p * step;
                    }
                }
                dist = next;
            }
        }
        dist
    }

    fn sample_outcome(&self, hist: &Histogram, rng: &mut DpRng) -> Outcome {
        dp_swapping(hist, self.epsilon, rng).expect("validated parameters").into_counts()
    }
}

/// Keeps each record with probability β; the released histogram holds the
/// surviving counts, xᵢ(D_β) ~ Binomial(xᵢ, β).
#[derive(Debug, Clone, Copy)]
pub struct Subsampling {
    pub beta: f64,
}

impl EnumerableMechanism for Subsampling {
    fn name(&self) -> String {
        format!("subsampling(beta={})", self.beta)
    }

    fn outcome_distribution(&self, hist: &Histogram) -> HashMap<Outcome, f64> {
        let per_cell: Vec<Vec<(u64, f64)>> = hist
            .counts()
            .iter()
            .map(|&x| {
                let mut c = 1.0;
                (0..=x)
                    .map(|j| {
                        let p = c * self.beta.powi(j as i32) * (1.0 - self.beta).powi((x - j) as i32);
                        c = c * (x - j) as f64 / (j + 1) as f64;
                        (j, p)
                    })
                    .collect()
            })
            .collect();
        product(&per_cell)
    }

    fn sample_outcome(&self, hist: &Histogram, rng: &mut DpRng) -> Outcome {
        hist.counts()
            .iter()
            .map(|&x| (0..x).filter(|_| rng.gen_bool(self.beta)).count() as u64)
            .collect()
    }
}

/// Releases the histogram unchanged.
#[derive(Debug, Clone, Copy)]
pub struct Identity;

impl EnumerableMechanism for Identity {
    fn name(&self) -> String {
        "identity".into()
    }

    fn outcome_distribution(&self, hist: &Histogram) -> HashMap<Outcome, f64> {
        HashMap::from([(hist.counts().to_vec(), 1.0)])
    }

    fn sample_outcome(&self, hist: &Histogram, _rng: &mut DpRng) -> Outcome {
        hist.counts().to_vec()
    }
}

/// Releases all-zero counts whatever the input.
#[derive(Debug, Clone, Copy)]
pub struct Constant;

impl EnumerableMechanism for Constant {
    fn name(&self) -> String {
        "constant".into()
    }

    fn outcome_distribution(&self, hist: &Histogram) -> HashMap<Outcome, f64> {
        HashMap::from([(vec![0; hist.len()], 1.0)])
    }

    fn sample_outcome(&self, hist: &Histogram, _rng: &mut DpRng) -> Outcome {
        vec![0; hist.len()]
    }
}

/// The verifiable form of a named mechanism. Continuous-output and
/// microdata-level mechanisms are not supported.
pub fn enumerable_mechanism(kind: MechanismKind, config: &MechanismConfig) -> Result<Box<dyn EnumerableMechanism>> {
    config.validate()?;
    Ok(match kind {
        MechanismKind::DpCellSuppression => Box::new(DpCellSuppression {
            k: config.k,
            epsilon: config.epsilon,
        }),
        MechanismKind::DpSwapping => Box::new(DpSwapping {
            epsilon: config.epsilon,
        }),
        MechanismKind::DpKAnonymity => Box::new(Subsampling {
            beta: match config.beta_override {
                Some(beta) => beta,
                None => crate::anonymity::subsampling_rate(config.epsilon)?,
            },
        }),
        MechanismKind::Identity => Box::new(Identity),
        other => {
            return Err(Error::Unsupported(format!(
                "{other} has no enumerable output distribution"
            )))
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum VerifyMode {
    /// Pr_D[S^∁] summed from the exact output law.
    Exact,
    /// Pr_D[S^∁] estimated from `samples` draws of the mechanism; the set
    /// S^∁ itself still comes from the exact laws.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifierReport {
    pub mechanism: String,
    pub epsilon: f64,
    /// max over adjacent (D, D′) of Pr[M(D) ∈ S^∁].
    pub delta_hat: f64,
    /// Monte-Carlo standard error of `delta_hat`; zero in exact mode.
    pub standard_error: f64,
    pub worst_pair: Option<(Outcome, Outcome)>,
    /// max over adjacent (D, D′) of Σₒ (Pr[M(D) = o] − e^ε·Pr[M(D′) = o])⁺, the
    /// smallest δ for which the pair satisfies (ε, δ)-DP. Never above `delta_hat`
    /// in exact mode.
    pub tight_delta: f64,
    pub pairs_checked: usize,
}

/// Every histogram over the schema's universe with entries at most `max_count`.
fn all_histograms(schema: &Arc<Schema>, max_count: u64) -> Vec<Histogram> {
    let n = schema.universe_size();
    let mut out = Vec::new();
    let mut counts = vec![0u64; n];
    loop {
        out.push(Histogram::from_counts(schema.clone(), counts.clone()).expect("sized to universe"));
        let mut i = 0;
        while i < n && counts[i] == max_count {
            counts[i] = 0;
            i += 1;
        }
        if i == n {
            return out;
        }
        counts[i] += 1;
    }
}

/// Brute-force privacy-loss tail: for every pair of adjacent histograms with
/// entries at most `max_count`, collect the outcomes whose probability under
/// D exceeds e^ε times that under D′ and measure their mass under D.
pub fn verify_dp_bruteforce(
    mechanism: &dyn EnumerableMechanism,
    schema: &Arc<Schema>,
    epsilon: f64,
    max_count: u64,
    mode: VerifyMode,
) -> Result<VerifierReport> {
    check_epsilon(epsilon)?;
    if schema.universe_size() > 3 {
        return Err(Error::Parameter(format!(
            "brute-force verification needs a universe of at most 3 cells, got {}",
            schema.universe_size()
        )));
    }
    if max_count == 0 || max_count > 3 {
        return Err(Error::Parameter(format!(
            "brute-force verification needs counts in 1..=3, got {max_count}"
        )));
    }
    if let VerifyMode::Sampled { samples, .. } = mode {
        if samples == 0 {
            return Err(Error::Parameter("sampled verification needs at least one sample".into()));
        }
    }

    let hists = all_histograms(schema, max_count);
    let pairs: Vec<(Histogram, Histogram)> = hists
        .iter()
        .flat_map(|d| {
            adjacent_histograms(d)
                .filter(|d2| d2.bound() <= max_count)
                .map(|d2| (d.clone(), d2))
                .collect::<Vec<_>>()
        })
        .collect();
    let threshold = epsilon.exp() * (1.0 + 1e-9);

    let results: Vec<(f64, f64, f64)> = pairs
        .par_iter()
        .enumerate()
        .map(|(index, (d, d2))| {
            let p = mechanism.outcome_distribution(d);
            let p2 = mechanism.outcome_distribution(d2);
            let mut outcomes: Vec<(&Outcome, f64)> = p.iter().map(|(o, &pd)| (o, pd)).collect();
            outcomes.sort_unstable_by(|a, b| a.0.cmp(b.0));
            let other = |o: &Outcome| p2.get(o).copied().unwrap_or(0.0);
            let tight = outcomes
                .iter()
                .fold(0.0, |acc, &(o, pd)| acc + (pd - epsilon.exp() * other(o)).max(0.0));
            let tail: Vec<(&Outcome, f64)> = outcomes.into_iter().filter(|&(o, pd)| pd > threshold * other(o)).collect();
            match mode {
                VerifyMode::Exact => (tail.iter().fold(0.0, |acc, &(_, pd)| acc + pd).min(1.0), 0.0, tight),
                VerifyMode::Sampled { samples, seed } => {
                    if tail.is_empty() {
                        return (0.0, 0.0, tight);
                    }
                    let mut rng = seeded_rng(derive_seed(seed, index as u64));
                    let hits = (0..samples)
                        .filter(|_| {
                            let o = mechanism.sample_outcome(d, &mut rng);
                            tail.iter().any(|&(t, _)| *t == o)
                        })
                        .count();
                    let mass = hits as f64 / samples as f64;
                    (mass, (mass * (1.0 - mass) / samples as f64).sqrt(), tight)
                }
            }
        })
        .collect();

    let mut worst: Option<usize> = None;
    for (i, r) in results.iter().enumerate() {
        if worst.map_or(true, |w| r.0 > results[w].0) {
            worst = Some(i);
        }
    }
    Ok(VerifierReport {
        mechanism: mechanism.name(),
        epsilon,
        delta_hat: worst.map_or(0.0, |w| results[w].0),
        standard_error: worst.map_or(0.0, |w| results[w].1),
        worst_pair: worst.map(|w| (pairs[w].0.counts().to_vec(), pairs[w].1.counts().to_vec())),
        tight_delta: results.iter().map(|r| r.2).fold(0.0, f64::max),
        pairs_checked: pairs.len(),
    })
}
