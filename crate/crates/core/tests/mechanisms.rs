use std::sync::Arc;

use da_core::mechanisms::{
    cell_suppression, discrete_gaussian_mechanism, dp_cell_suppression, dp_cell_suppression_values, dp_swapping,
    laplace_mechanism, nonneg_project, seeded_rng, swapping, SuppressedFill, SuppressionVariant,
};
use da_core::metrics::{analytic_bias_cs, empirical_bias, Projection};
use da_core::tabular::{build_histogram, Attribute, Dataset, GroupIndex, Histogram, Schema};
use proptest::prelude::*;
use rand::Rng;

fn line_schema(n: usize) -> Arc<Schema> {
    let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    Arc::new(Schema::new(vec![Attribute::categorical("Q", labels).quasi_identifier()]).unwrap())
}

fn grouped_schema() -> Arc<Schema> {
    Arc::new(
        Schema::new(vec![
            Attribute::categorical("RACE", ["1", "2", "3"]).quasi_identifier(),
            Attribute::categorical("SEX", ["f", "m"]),
            Attribute::categorical("OWN", ["0", "1"]),
        ])
        .unwrap(),
    )
}

fn hist(counts: Vec<u64>) -> Histogram {
    Histogram::from_counts(line_schema(counts.len()), counts).unwrap()
}

/// Variance of N_ℤ(0, σ²) by summing its pmf over |y| ≤ 20σ.
fn discrete_gaussian_variance(sigma2: f64) -> f64 {
    let limit = (20.0 * sigma2.sqrt()).ceil() as i64;
    let (mut z, mut m2) = (0.0, 0.0);
    for y in -limit..=limit {
        let w = (-(y * y) as f64 / (2.0 * sigma2)).exp();
        z += w;
        m2 += (y * y) as f64 * w;
    }
    m2 / z
}

#[test]
fn discrete_gaussian_noise_moments() {
    for eps in [1.0, 2.0] {
        let n = 100_000;
        let h = hist(vec![0]);
        let mut rng = seeded_rng(11);
        let noise: Vec<f64> = (0..n)
            .map(|_| discrete_gaussian_mechanism(&h, eps, &mut rng).unwrap()[0] as f64)
            .collect();
        let mean = noise.iter().sum::<f64>() / n as f64;
        let var = noise.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let want = discrete_gaussian_variance(4.0 / (eps * eps));
        assert!(mean.abs() < 3.0 * (want / n as f64).sqrt(), "eps {eps}: mean {mean}");
        assert!((var / want - 1.0).abs() < 0.05, "eps {eps}: var {var} vs {want}");
    }
}

#[test]
fn laplace_release_is_unbiased_per_cell() {
    let h = hist(vec![0, 3, 50]);
    let b = empirical_bias(|h, rng| laplace_mechanism(h, 1.0, rng), &h, 100_000, 3, Projection::Disabled).unwrap();
    let se = b.standard_errors.as_ref().unwrap();
    for (bias, se) in b.per_cell.iter().zip(se) {
        assert!(bias.abs() <= 3.0 * se, "bias {bias} se {se}");
    }
}

#[test]
fn dp_suppression_bias_matches_closed_form() {
    let h = hist(vec![2, 6, 10]);
    let eps = 1.0;
    let b = empirical_bias(
        |h, rng| {
            dp_cell_suppression_values(h, 6, eps, rng, SuppressionVariant::PerCellNoise, SuppressedFill::Half)
        },
        &h,
        100_000,
        5,
        Projection::Disabled,
    )
    .unwrap();
    let want = analytic_bias_cs(&h, 6, eps).unwrap();
    for ((got, want), se) in b.per_cell.iter().zip(&want.per_cell).zip(b.standard_errors.unwrap()) {
        assert!((got - want).abs() <= 3.0 * se + 1e-12, "{got} vs {want}");
    }
}

#[test]
fn traditional_suppression_on_block_histogram() {
    // Block × Gender × VotingAge histogram with threshold 2: singletons become ⌊2/2⌋ = 1
    // and empty cells become 1 as well.
    let schema = Arc::new(
        Schema::new(vec![
            Attribute::categorical("Block", ["B1", "B2"]),
            Attribute::categorical("Gender", ["F", "M"]).quasi_identifier(),
            Attribute::categorical("VotingAge", ["False", "True"]),
        ])
        .unwrap(),
    );
    let h = Histogram::from_counts(schema, vec![0, 2, 1, 1, 0, 1, 0, 1]).unwrap();
    assert_eq!(cell_suppression(&h, 2).counts(), &[1, 2, 1, 1, 1, 1, 1, 1]);
}

#[test]
fn swapping_keeps_group_totals_off_the_quasi_identifier() {
    let schema = grouped_schema();
    let mut rng = seeded_rng(12);
    let rows: Vec<Vec<u32>> = (0..300)
        .map(|_| vec![rng.gen_range(0..3), rng.gen_range(0..2), rng.gen_range(0..2)])
        .collect();
    let d = Dataset::from_indices(schema.clone(), rows).unwrap();
    let out = swapping(&d, 0.2, &mut rng).unwrap();
    let (before, after) = (build_histogram(&d), build_histogram(&out));
    for g in GroupIndex::new(&schema).groups() {
        let a: u64 = g.iter().map(|&c| before.counts()[c]).sum();
        let b: u64 = g.iter().map(|&c| after.counts()[c]).sum();
        assert_eq!(a, b);
    }
}

fn grouped_hist() -> impl Strategy<Value = Histogram> {
    proptest::collection::vec(0u64..20, 12).prop_map(|c| Histogram::from_counts(grouped_schema(), c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn same_seed_same_release(h in grouped_hist(), seed in any::<u64>()) {
        let run = |s| {
            let mut rng = seeded_rng(s);
            (
                laplace_mechanism(&h, 0.7, &mut rng).unwrap(),
                discrete_gaussian_mechanism(&h, 0.7, &mut rng).unwrap(),
                dp_cell_suppression(&h, 4, 0.7, &mut rng, SuppressionVariant::PerCellNoise).unwrap(),
                dp_swapping(&h, 0.7, &mut rng).unwrap(),
            )
        };
        prop_assert_eq!(run(seed), run(seed));
    }

    #[test]
    fn suppression_is_idempotent(c in proptest::collection::vec(0u64..30, 1..20), k in 1u64..12) {
        let h = hist(c);
        let once = cell_suppression(&h, k);
        prop_assert_eq!(cell_suppression(&once, k), once);
    }

    #[test]
    fn private_suppression_releases_count_or_fill(h in grouped_hist(), k in 1u64..12, seed in any::<u64>()) {
        let out = dp_cell_suppression(&h, k, 0.5, &mut seeded_rng(seed), SuppressionVariant::PerCellNoise).unwrap();
        for (&o, &x) in out.counts().iter().zip(h.counts()) {
            prop_assert!(o == x || o == k / 2);
        }
    }

    #[test]
    fn dp_swapping_conserves_every_group(h in grouped_hist(), eps in 0.05f64..4.0, seed in any::<u64>()) {
        let out = dp_swapping(&h, eps, &mut seeded_rng(seed)).unwrap();
        prop_assert_eq!(out.total(), h.total());
        for g in GroupIndex::new(h.schema()).groups() {
            let a: u64 = g.iter().map(|&c| h.counts()[c]).sum();
            let b: u64 = g.iter().map(|&c| out.counts()[c]).sum();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn projection_is_non_negative(v in proptest::collection::vec(-1e6f64..1e6, 0..50)) {
        let p = nonneg_project(&v);
        prop_assert_eq!(p.len(), v.len());
        for (&orig, &proj) in v.iter().zip(&p) {
            prop_assert!(orig > 0.0 || proj == 0);
        }
    }
}
