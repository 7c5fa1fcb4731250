use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tabular::{Dataset, Schema};

/// Count vector x(D) over the lexicographically enumerated universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    schema: Arc<Schema>,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn zeros(schema: Arc<Schema>) -> Self {
        let n = schema.universe_size();
        Histogram {
            schema,
            counts: vec![0; n],
        }
    }

    pub fn from_counts(schema: Arc<Schema>, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != schema.universe_size() {
            return Err(Error::Structure(format!(
                "histogram has {} cells, universe has {}",
                counts.len(),
                schema.universe_size()
            )));
        }
        Ok(Histogram { schema, counts })
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn into_counts(self) -> Vec<u64> {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Σ xᵢ
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// B, the largest entry.
    pub fn bound(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// x₁ in the sorted-order notation.
    pub fn min_count(&self) -> u64 {
        self.counts.iter().copied().min().unwrap_or(0)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// ‖self − other‖₁ against an arbitrary real-valued release.
    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        self.counts
            .iter()
            .zip(other)
            .map(|(&x, &y)| (y - x as f64).abs())
            .sum()
    }
}

pub fn build_histogram(dataset: &Dataset) -> Histogram {
    let schema = dataset.schema().clone();
    let mut counts = vec![0u64; schema.universe_size()];
    for row in dataset.rows() {
        counts[schema.cell_index(row)] += 1;
    }
    Histogram { schema, counts }
}

/// Expands counts back into records, cell by cell in lexicographic order.
pub fn histogram_to_dataset(hist: &Histogram) -> Dataset {
    let schema = hist.schema().clone();
    let mut rows = Vec::with_capacity(hist.total() as usize);
    for (cell, &count) in hist.counts().iter().enumerate() {
        if count == 0 {
            continue;
        }
        let values = schema.cell_values(cell);
        for _ in 0..count {
            rows.push(values.clone());
        }
    }
    Dataset::from_rows_unchecked(schema, rows)
}

/// All histograms reachable by changing one record: one positive cell loses
/// a unit and a different cell gains it.
pub fn adjacent_histograms(hist: &Histogram) -> impl Iterator<Item = Histogram> + '_ {
    let n = hist.len();
    hist.counts()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .flat_map(move |(from, _)| {
            (0..n).filter(move |&to| to != from).map(move |to| {
                let mut counts = hist.counts.clone();
                counts[from] -= 1;
                counts[to] += 1;
                Histogram {
                    schema: hist.schema.clone(),
                    counts,
                }
            })
        })
}

/// Index sets ℐᵢ: cells sharing the same non-QI tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupIndex {
    groups: Vec<Vec<usize>>,
    group_of: Vec<usize>,
}

impl GroupIndex {
    pub fn new(schema: &Schema) -> Self {
        let n = schema.universe_size();
        let n_q = schema.qi_universe_size();
        let mut groups = vec![Vec::with_capacity(n_q); n / n_q];
        let mut group_of = vec![0; n];
        for cell in 0..n {
            let g = schema.non_qi_index(cell);
            groups[g].push(cell);
            group_of[cell] = g;
        }
        GroupIndex { groups, group_of }
    }

    /// Builds an index from explicit groups, checking that they partition `0..n`.
    pub fn from_groups(groups: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut group_of = vec![usize::MAX; n];
        for (g, members) in groups.iter().enumerate() {
            for &cell in members {
                if cell >= n || group_of[cell] != usize::MAX {
                    return Err(Error::Structure(format!(
                        "cell {cell} is out of range or appears in two groups"
                    )));
                }
                group_of[cell] = g;
            }
        }
        if group_of.contains(&usize::MAX) {
            return Err(Error::Structure("groups do not cover every cell".into()));
        }
        Ok(GroupIndex { groups, group_of })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// ℐᵢ for cell `i`.
    pub fn group_of(&self, cell: usize) -> &[usize] {
        &self.groups[self.group_of[cell]]
    }

    pub fn num_cells(&self) -> usize {
        self.group_of.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Attribute;

    pub(crate) fn block_schema() -> Arc<Schema> {
        Arc::new(
            Schema::new(vec![
                Attribute::categorical("Block", ["B1", "B2"]),
                Attribute::categorical("Gender", ["F", "M"]).quasi_identifier(),
                Attribute::categorical("VotingAge", ["False", "True"]),
            ])
            .unwrap(),
        )
    }

    fn line_schema(n: usize) -> Arc<Schema> {
        let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        Arc::new(Schema::new(vec![Attribute::categorical("A", labels)]).unwrap())
    }

    #[test]
    fn empty_dataset_gives_zero_histogram() {
        let h = build_histogram(&Dataset::empty(block_schema()));
        assert!(h.counts().iter().all(|&c| c == 0));
        assert_eq!(h.bound(), 0);
    }

    #[test]
    fn identical_rows_share_a_cell() {
        let schema = Arc::new(
            Schema::new(vec![
                Attribute::categorical("A", ["a", "b"]),
                Attribute::categorical("B", ["c", "d"]),
            ])
            .unwrap(),
        );
        let d = Dataset::from_labels(schema, &[vec!["b", "c"], vec!["b", "c"]]).unwrap();
        assert_eq!(build_histogram(&d).counts(), &[0, 0, 2, 0]);
    }

    #[test]
    fn block_gender_age_histogram() {
        // Six records over Block × Gender × VotingAge.
        let d = Dataset::from_labels(
            block_schema(),
            &[
                vec!["B1", "F", "True"],
                vec!["B1", "F", "True"],
                vec!["B1", "M", "True"],
                vec!["B1", "M", "False"],
                vec!["B2", "F", "True"],
                vec!["B2", "M", "True"],
            ],
        )
        .unwrap();
        let h = build_histogram(&d);
        // (B1,F,F) (B1,F,T) (B1,M,F) (B1,M,T) (B2,F,F) (B2,F,T) (B2,M,F) (B2,M,T)
        assert_eq!(h.counts(), &[0, 2, 1, 1, 0, 1, 0, 1]);
        assert_eq!(h.total(), 6);
        assert_eq!(h.bound(), 2);
    }

    #[test]
    fn zero_histogram_expands_to_empty_dataset() {
        assert!(histogram_to_dataset(&Histogram::zeros(block_schema())).is_empty());
    }

    #[test]
    fn repeated_cell_expands_to_identical_rows() {
        let schema = block_schema();
        let cell = schema.cell_index(&[0, 0, 1]);
        let mut counts = vec![0; 8];
        counts[cell] = 2;
        let d = histogram_to_dataset(&Histogram::from_counts(schema, counts).unwrap());
        assert_eq!(d.len(), 2);
        assert_eq!(d.row_labels(0), vec!["B1", "F", "True"]);
        assert_eq!(d.rows()[0], d.rows()[1]);
    }

    #[test]
    fn neighbors_of_small_histograms() {
        let h = Histogram::from_counts(line_schema(2), vec![1, 0]).unwrap();
        let n: Vec<_> = adjacent_histograms(&h).map(|h| h.into_counts()).collect();
        assert_eq!(n, vec![vec![0, 1]]);

        let h = Histogram::from_counts(line_schema(2), vec![1, 1]).unwrap();
        let n: Vec<_> = adjacent_histograms(&h).map(|h| h.into_counts()).collect();
        assert_eq!(n, vec![vec![0, 2], vec![2, 0]]);

        let h = Histogram::from_counts(line_schema(3), vec![2, 1, 0]).unwrap();
        let n: Vec<_> = adjacent_histograms(&h).map(|h| h.into_counts()).collect();
        assert_eq!(
            n,
            vec![
                vec![1, 2, 0],
                vec![1, 1, 1],
                vec![3, 0, 0],
                vec![2, 0, 1]
            ]
        );
        assert_eq!(n.len(), 2 * 2);
    }

    #[test]
    fn empty_histogram_has_no_neighbors() {
        let h = Histogram::zeros(line_schema(3));
        assert_eq!(adjacent_histograms(&h).count(), 0);
    }

    #[test]
    fn group_index_partitions_by_non_qi() {
        let schema = block_schema();
        let groups = GroupIndex::new(&schema);
        assert_eq!(groups.groups().len(), 4);
        for g in groups.groups() {
            assert_eq!(g.len(), schema.qi_universe_size());
            let key = schema.non_qi_index(g[0]);
            assert!(g.iter().all(|&c| schema.non_qi_index(c) == key));
        }
        assert!(GroupIndex::from_groups(vec![vec![0, 1], vec![1]], 3).is_err());
        assert!(GroupIndex::from_groups(vec![vec![0]], 2).is_err());
    }
}
