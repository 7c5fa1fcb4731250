use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::mechanisms::check_epsilon;
use crate::tabular::{AttributeKind, Dataset, Histogram, Schema};

/// γ = e^ε / (e^ε + n_Q − 1), the probability a record keeps its QI tuple.
pub fn retention_probability(epsilon: f64, n_q: usize) -> f64 {
    1.0 / (1.0 + (n_q as f64 - 1.0) * (-epsilon).exp())
}

/// Record distance: discrete metric on categorical attributes plus
/// range-normalized absolute difference on numeric ones.
pub fn swap_distance(schema: &Schema, a: &[u32], b: &[u32]) -> f64 {
    schema
        .attributes()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(attr, (&u, &v))| match attr.kind {
            AttributeKind::Categorical => f64::from(u8::from(u != v)),
            AttributeKind::Numeric => {
                let range = attr.numeric_value(attr.domain_size() - 1) - attr.numeric_value(0);
                if range > 0.0 {
                    (attr.numeric_value(u as usize) - attr.numeric_value(v as usize)).abs() / range
                } else {
                    0.0
                }
            }
        })
        .sum()
}

/// Traditional swapping: ⌊(1 − swap_fraction)·N/2⌋ times, pair a random
/// unswapped record with its nearest unswapped neighbour and exchange their
/// quasi-identifier values. Ties go to the lowest row index.
pub fn swapping<R: Rng + ?Sized>(dataset: &Dataset, swap_fraction: f64, rng: &mut R) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&swap_fraction) {
        return Err(Error::Parameter(format!(
            "swap_fraction must lie in [0, 1], got {swap_fraction}"
        )));
    }
    let schema = dataset.schema().clone();
    let qi = schema.quasi_identifiers().to_vec();
    if qi.is_empty() {
        return Err(Error::Config("swapping needs at least one quasi-identifier".into()));
    }
    let m = dataset.len();
    let swaps = ((1.0 - swap_fraction) * m as f64 / 2.0).floor() as usize;
    let mut rows = dataset.rows().to_vec();
    if swaps == 0 {
        return Dataset::from_indices(schema, rows);
    }

    // unswapped rows, bucketed by the universe cell they occupy
    let mut by_cell: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); schema.universe_size()];
    for r in 0..m {
        by_cell[dataset.cell_of(r)].insert(r);
    }
    let mut pool: Vec<usize> = (0..m).collect();
    let mut slot: Vec<usize> = (0..m).collect();
    let remove = |pool: &mut Vec<usize>, slot: &mut Vec<usize>, r: usize| {
        let at = slot[r];
        let last = *pool.last().expect("non-empty pool");
        pool.swap_remove(at);
        if last != r {
            slot[last] = at;
        }
    };

    let cells: Vec<Vec<u32>> = (0..schema.universe_size()).map(|c| schema.cell_values(c)).collect();
    for _ in 0..swaps {
        if pool.len() < 2 {
            break;
        }
        let i = pool[rng.gen_range(0..pool.len())];
        let cell_i = schema.cell_index(&rows[i]);
        by_cell[cell_i].remove(&i);
        remove(&mut pool, &mut slot, i);

        let mut best: Option<(f64, usize, usize)> = None;
        for (cell, members) in by_cell.iter().enumerate() {
            let Some(&j) = members.first() else { continue };
            let d = swap_distance(&schema, &rows[i], &cells[cell]);
            let better = match best {
                None => true,
                Some((bd, bj, _)) => d < bd || (d == bd && j < bj),
            };
            if better {
                best = Some((d, j, cell));
            }
        }
        let (_, j, cell_j) = best.expect("at least one other unswapped row");
        by_cell[cell_j].remove(&j);
        remove(&mut pool, &mut slot, j);

        for &a in &qi {
            let (vi, vj) = (rows[i][a], rows[j][a]);
            rows[i][a] = vj;
            rows[j][a] = vi;
        }
    }
    Dataset::from_indices(schema, rows)
}

/// Private swapping: every record keeps its QI tuple with probability γ and
/// otherwise moves to a uniformly chosen different QI tuple, keeping its
/// non-QI values.
pub fn dp_swapping<R: Rng + ?Sized>(hist: &Histogram, epsilon: f64, rng: &mut R) -> Result<Histogram> {
    check_epsilon(epsilon)?;
    let schema = hist.schema();
    let n_q = schema.qi_universe_size();
    if n_q < 2 {
        return Ok(hist.clone());
    }
    let keep = retention_probability(epsilon, n_q);
    let mut out = vec![0u64; hist.len()];
    for (cell, &count) in hist.counts().iter().enumerate() {
        let q = schema.qi_index(cell);
        for _ in 0..count {
            let target = if rng.gen_bool(keep) {
                cell
            } else {
                let mut q_new = rng.gen_range(0..n_q);
                while q_new == q {
                    q_new = rng.gen_range(0..n_q);
                }
                schema.with_qi_index(cell, q_new)
            };
            out[target] += 1;
        }
    }
    Histogram::from_counts(schema.clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::seeded_rng;
    use crate::tabular::{build_histogram, Attribute, GroupIndex};
    use std::sync::Arc;

    fn schema(qi: bool) -> Arc<Schema> {
        let race = Attribute::categorical("RACE", ["a", "b", "c"]);
        Arc::new(
            Schema::new(vec![
                if qi { race.quasi_identifier() } else { race },
                Attribute::categorical("SEX", ["f", "m"]),
                Attribute::numeric("AGE", ["0", "10", "20", "30"]),
            ])
            .unwrap(),
        )
    }

    fn random_dataset(seed: u64, m: usize) -> Dataset {
        let mut rng = seeded_rng(seed);
        let rows = (0..m)
            .map(|_| vec![rng.gen_range(0..3), rng.gen_range(0..2), rng.gen_range(0..4)])
            .collect();
        Dataset::from_indices(schema(true), rows).unwrap()
    }

    #[test]
    fn retention_probability_values() {
        assert!((retention_probability(2f64.ln(), 3) - 0.5).abs() < 1e-12);
        assert_eq!(retention_probability(1.0, 1), 1.0);
        assert!(retention_probability(50.0, 9) > 1.0 - 1e-15);
    }

    #[test]
    fn distance_mixes_discrete_and_numeric_parts() {
        let s = schema(true);
        assert_eq!(swap_distance(&s, &[0, 0, 0], &[0, 0, 0]), 0.0);
        assert!((swap_distance(&s, &[0, 1, 0], &[1, 0, 3]) - 3.0).abs() < 1e-12);
        assert!((swap_distance(&s, &[0, 0, 1], &[0, 0, 2]) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn full_fraction_is_identity() {
        let d = random_dataset(1, 50);
        let out = swapping(&d, 1.0, &mut seeded_rng(2)).unwrap();
        assert_eq!(out.rows(), d.rows());
    }

    #[test]
    fn rows_equal_off_the_quasi_identifiers_just_trade_places() {
        let d = Dataset::from_indices(schema(true), vec![vec![0, 1, 2], vec![2, 1, 2]]).unwrap();
        let out = swapping(&d, 0.0, &mut seeded_rng(3)).unwrap();
        assert_eq!(out.rows(), &[vec![2, 1, 2], vec![0, 1, 2]]);
        assert_eq!(build_histogram(&out), build_histogram(&d));
    }

    #[test]
    fn non_qi_values_never_move() {
        for seed in 0..20 {
            let d = random_dataset(seed, 40);
            let out = swapping(&d, 0.3, &mut seeded_rng(seed + 100)).unwrap();
            assert_eq!(out.len(), d.len());
            for (a, b) in d.rows().iter().zip(out.rows()) {
                assert_eq!(a[1..], b[1..]);
            }
        }
    }

    #[test]
    fn missing_quasi_identifier_is_a_config_error() {
        let d = Dataset::from_indices(schema(false), vec![vec![0, 0, 0], vec![1, 1, 1]]).unwrap();
        assert!(matches!(swapping(&d, 0.0, &mut seeded_rng(1)), Err(Error::Config(_))));
    }

    #[test]
    fn dp_swapping_conserves_group_mass() {
        let d = random_dataset(5, 300);
        let h = build_histogram(&d);
        let groups = GroupIndex::new(h.schema());
        let mut rng = seeded_rng(6);
        for _ in 0..50 {
            let out = dp_swapping(&h, 0.5, &mut rng).unwrap();
            assert_eq!(out.total(), h.total());
            for g in groups.groups() {
                let before: u64 = g.iter().map(|&c| h.counts()[c]).sum();
                let after: u64 = g.iter().map(|&c| out.counts()[c]).sum();
                assert_eq!(before, after);
            }
        }
    }

    #[test]
    fn dp_swapping_with_large_epsilon_is_identity() {
        let h = build_histogram(&random_dataset(7, 100));
        let out = dp_swapping(&h, 60.0, &mut seeded_rng(8)).unwrap();
        assert_eq!(out, h);
    }
}
