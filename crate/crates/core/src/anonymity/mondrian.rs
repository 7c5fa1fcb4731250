use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tabular::{Attribute, AttributeKind, Dataset, Schema};

/// The generalized value of one quasi-identifier within an equivalence class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Generalization {
    /// Merged categories, as ascending domain indices.
    Values(Vec<u32>),
    /// Closed range of domain indices of a numeric attribute.
    Interval { lo: u32, hi: u32 },
}

impl Generalization {
    pub fn contains(&self, value: u32) -> bool {
        match self {
            Generalization::Values(v) => v.binary_search(&value).is_ok(),
            Generalization::Interval { lo, hi } => (*lo..=*hi).contains(&value),
        }
    }

    pub fn is_singleton(&self) -> bool {
        match self {
            Generalization::Values(v) => v.len() == 1,
            Generalization::Interval { lo, hi } => lo == hi,
        }
    }

    /// `a|b|c` for merged categories, `[a,b]` for intervals.
    pub fn render(&self, attr: &Attribute) -> String {
        match self {
            Generalization::Values(v) => v
                .iter()
                .map(|&i| attr.domain[i as usize].as_str())
                .collect::<Vec<_>>()
                .join("|"),
            Generalization::Interval { lo, hi } => {
                format!("[{},{}]", attr.domain[*lo as usize], attr.domain[*hi as usize])
            }
        }
    }
}

/// One Mondrian leaf: the generalized QI box, and the records inside it
/// grouped by their (untouched) non-QI tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceClass {
    /// One entry per quasi-identifier, in schema order.
    pub qi: Vec<Generalization>,
    /// Non-QI tuple (in schema order of the non-QI attributes) and its multiplicity.
    pub members: Vec<(Vec<u32>, u64)>,
}

impl EquivalenceClass {
    pub fn size(&self) -> u64 {
        self.members.iter().map(|(_, c)| c).sum()
    }
}

/// Output of Mondrian: a partition of the records into equivalence classes.
#[derive(Debug, Clone, PartialEq)]
pub struct AnonymizedPartition {
    schema: Arc<Schema>,
    k: u64,
    classes: Vec<EquivalenceClass>,
}

impl AnonymizedPartition {
    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn classes(&self) -> &[EquivalenceClass] {
        &self.classes
    }

    /// Σ counts, which equals the number of input rows.
    pub fn total(&self) -> u64 {
        self.classes.iter().map(EquivalenceClass::size).sum()
    }

    /// Whether every equivalence class holds at least `k` records.
    pub fn is_k_anonymous(&self) -> bool {
        self.classes.iter().all(|c| c.size() >= self.k)
    }

    /// One line per generalized record: every attribute in schema order plus
    /// a trailing `count` column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let schema = &self.schema;
        let mut writer = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = schema.attributes().iter().map(|a| a.name.as_str()).collect();
        header.push("count");
        writer.write_record(&header)?;
        for class in &self.classes {
            for (non_qi, count) in &class.members {
                let mut record = vec![String::new(); schema.num_attributes()];
                for (g, &a) in class.qi.iter().zip(schema.quasi_identifiers()) {
                    record[a] = g.render(schema.attribute(a));
                }
                for (&v, &a) in non_qi.iter().zip(schema.non_quasi_identifiers()) {
                    record[a] = schema.attribute(a).domain[v as usize].clone();
                }
                record.push(count.to_string());
                writer.write_record(&record)?;
            }
        }
        writer.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

/// Normalized width of attribute `a` over the rows in `part`.
fn spread(schema: &Schema, rows: &[Vec<u32>], part: &[usize], a: usize) -> f64 {
    let attr = schema.attribute(a);
    match attr.kind {
        AttributeKind::Categorical => {
            let mut seen = vec![false; attr.domain_size()];
            for &r in part {
                seen[rows[r][a] as usize] = true;
            }
            let distinct = seen.iter().filter(|&&s| s).count();
            if attr.domain_size() > 1 {
                (distinct as f64 - 1.0) / (attr.domain_size() as f64 - 1.0)
            } else {
                0.0
            }
        }
        AttributeKind::Numeric => {
            let (lo, hi) = part.iter().fold((u32::MAX, 0), |(lo, hi), &r| {
                (lo.min(rows[r][a]), hi.max(rows[r][a]))
            });
            let range = attr.numeric_value(attr.domain_size() - 1) - attr.numeric_value(0);
            if range > 0.0 {
                (attr.numeric_value(hi as usize) - attr.numeric_value(lo as usize)) / range
            } else {
                0.0
            }
        }
    }
}

/// Median cut on attribute `a`, or `None` when a side would hold fewer than `k` rows.
fn median_split(rows: &[Vec<u32>], part: &[usize], a: usize, k: usize) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut values: Vec<u32> = part.iter().map(|&r| rows[r][a]).collect();
    values.sort_unstable();
    let median = values[values.len() / 2];
    let mut cut = median;
    if values[0] == median {
        // everything below the median is empty; put the median block on the left
        cut = median + 1;
    }
    let (lhs, rhs): (Vec<usize>, Vec<usize>) = part.iter().partition(|&&r| rows[r][a] < cut);
    (lhs.len() >= k && rhs.len() >= k).then_some((lhs, rhs))
}

fn leaf(schema: &Schema, rows: &[Vec<u32>], part: &[usize]) -> EquivalenceClass {
    let qi = schema
        .quasi_identifiers()
        .iter()
        .map(|&a| {
            let mut values: Vec<u32> = part.iter().map(|&r| rows[r][a]).collect();
            values.sort_unstable();
            values.dedup();
            match schema.attribute(a).kind {
                AttributeKind::Categorical => Generalization::Values(values),
                AttributeKind::Numeric => Generalization::Interval {
                    lo: values[0],
                    hi: *values.last().expect("non-empty partition"),
                },
            }
        })
        .collect();
    let mut members: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    for &r in part {
        let key = schema.non_quasi_identifiers().iter().map(|&a| rows[r][a]).collect();
        *members.entry(key).or_insert(0) += 1;
    }
    EquivalenceClass {
        qi,
        members: members.into_iter().collect(),
    }
}

/// Strict Mondrian: recursively cut the partition at the median of the QI
/// attribute with the widest normalized spread, trying narrower attributes
/// when a cut would leave a side with fewer than `k` rows.
pub fn mondrian_kanonymize(dataset: &Dataset, k: u64) -> Result<AnonymizedPartition> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    if dataset.is_empty() {
        return Err(Error::Parameter("cannot anonymize an empty dataset".into()));
    }
    let schema = dataset.schema().clone();
    if schema.quasi_identifiers().is_empty() {
        return Err(Error::Config("k-anonymity needs at least one quasi-identifier".into()));
    }
    let rows = dataset.rows();
    let k_rows = usize::try_from(k).unwrap_or(usize::MAX);

    let mut classes = Vec::new();
    let mut stack = vec![(0..rows.len()).collect::<Vec<usize>>()];
    while let Some(part) = stack.pop() {
        let mut dims: Vec<(f64, usize)> = schema
            .quasi_identifiers()
            .iter()
            .map(|&a| (spread(&schema, rows, &part, a), a))
            .filter(|&(s, _)| s > 0.0)
            .collect();
        // widest first; the stable sort keeps schema order among ties
        dims.sort_by(|x, y| y.0.total_cmp(&x.0));
        let split = if part.len() >= 2 * k_rows {
            dims.iter().find_map(|&(_, a)| median_split(rows, &part, a, k_rows))
        } else {
            None
        };
        match split {
            Some((lhs, rhs)) => {
                // right half pushed first so classes come out left to right
                stack.push(rhs);
                stack.push(lhs);
            }
            None => classes.push(leaf(&schema, rows, &part)),
        }
    }
    Ok(AnonymizedPartition { schema, k, classes })
}
