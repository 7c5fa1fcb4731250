//! Mondrian k-anonymization, sampling records back out of generalized
//! classes, and the subsample-then-anonymize private variant.

mod mondrian;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::mechanisms::check_k;
use crate::tabular::{Attribute, Dataset};

pub use mondrian::{mondrian_kanonymize, AnonymizedPartition, EquivalenceClass, Generalization};

/// Nearest domain index to a (rounded, non-negative) numeric value.
fn nearest_index(attr: &Attribute, value: f64) -> u32 {
    let mut best = 0;
    let mut best_gap = f64::INFINITY;
    for i in 0..attr.domain_size() {
        let gap = (attr.numeric_value(i) - value).abs();
        if gap < best_gap {
            best = i;
            best_gap = gap;
        }
    }
    best as u32
}

fn sample_generalized<R: Rng + ?Sized>(g: &Generalization, attr: &Attribute, rng: &mut R) -> u32 {
    match g {
        Generalization::Values(values) => *values.choose(rng).expect("non-empty merged set"),
        Generalization::Interval { lo, hi } if lo == hi => *lo,
        Generalization::Interval { lo, hi } => {
            let a = attr.numeric_value(*lo as usize);
            let b = attr.numeric_value(*hi as usize);
            let normal = Normal::new((a + b) / 2.0, (b - a) / 4.0).expect("finite interval");
            let value = normal.sample(rng).round().max(0.0);
            nearest_index(attr, value)
        }
    }
}

/// Draws one concrete record per generalized record: merged categories are
/// resolved uniformly, numeric intervals through N((a+b)/2, (b−a)/4)
/// rounded, clamped at zero and snapped to the nearest domain value.
pub fn reconstruct<R: Rng + ?Sized>(partition: &AnonymizedPartition, rng: &mut R) -> Dataset {
    let schema = partition.schema().clone();
    let mut rows = Vec::with_capacity(partition.total() as usize);
    for class in partition.classes() {
        for (non_qi, count) in &class.members {
            for _ in 0..*count {
                let mut row = vec![0u32; schema.num_attributes()];
                for (&v, &a) in non_qi.iter().zip(schema.non_quasi_identifiers()) {
                    row[a] = v;
                }
                for (g, &a) in class.qi.iter().zip(schema.quasi_identifiers()) {
                    row[a] = sample_generalized(g, schema.attribute(a), rng);
                }
                rows.push(row);
            }
        }
    }
    Dataset::from_rows_unchecked(schema, rows)
}

/// Traditional k-anonymity release: Mondrian followed by reconstruction.
pub fn k_anonymity<R: Rng + ?Sized>(dataset: &Dataset, k: u64, rng: &mut R) -> Result<Dataset> {
    if dataset.is_empty() {
        return Ok(dataset.clone());
    }
    Ok(reconstruct(&mondrian_kanonymize(dataset, k)?, rng))
}

/// β = 1 − e^(−ε), the retention rate matched to budget ε.
pub fn subsampling_rate(epsilon: f64) -> Result<f64> {
    let beta = -(-epsilon).exp_m1();
    check_beta(beta)?;
    Ok(beta)
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("subsampling rate must lie in (0, 1), got {beta}")))
    }
}

/// Keeps each row independently with probability `beta`.
pub fn bernoulli_subsample<R: Rng + ?Sized>(dataset: &Dataset, beta: f64, rng: &mut R) -> Result<Dataset> {
    check_beta(beta)?;
    let rows = dataset
        .rows()
        .iter()
        .filter(|_| rng.gen_bool(beta))
        .cloned()
        .collect();
    Ok(Dataset::from_rows_unchecked(dataset.schema().clone(), rows))
}

/// Subsample at rate β (1 − e^(−ε) unless overridden), k-anonymize with
/// Mondrian, and reconstruct. An empty subsample yields an empty dataset.
pub fn dp_kanonymity<R: Rng + ?Sized>(
    dataset: &Dataset,
    k: u64,
    epsilon: f64,
    rng: &mut R,
    beta_override: Option<f64>,
) -> Result<Dataset> {
    check_k(k)?;
    let beta = match beta_override {
        Some(beta) => {
            check_beta(beta)?;
            beta
        }
        None => subsampling_rate(epsilon)?,
    };
    let sample = bernoulli_subsample(dataset, beta, rng)?;
    k_anonymity(&sample, k, rng)
}
