use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{Dataset, Schema};

/// How a raw numeric column is mapped onto category labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum BinRule {
    /// `"1"` when the value exceeds `threshold`, `"0"` otherwise.
    Threshold { threshold: f64 },
    /// `bins` equal-width brackets over the observed `[min, max]`, labelled
    /// `"0"`..; right-open except the last.
    EqualWidth { bins: usize },
}

impl BinRule {
    fn apply(&self, column: &str, raw: &[String]) -> Result<Vec<String>> {
        let values = raw
            .iter()
            .enumerate()
            .map(|(r, s)| {
                s.trim().parse::<f64>().map_err(|_| Error::Row {
                    row: r,
                    message: format!("{column} value {s:?} is not numeric"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(match *self {
            BinRule::Threshold { threshold } => values
                .iter()
                .map(|&v| if v > threshold { "1" } else { "0" }.to_string())
                .collect(),
            BinRule::EqualWidth { bins } => {
                if bins == 0 {
                    return Err(Error::Parameter(format!("{column}: zero bins")));
                }
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let width = (hi - lo) / bins as f64;
                values
                    .iter()
                    .map(|&v| {
                        let b = if width > 0.0 {
                            (((v - lo) / width).floor() as usize).min(bins - 1)
                        } else {
                            0
                        };
                        b.to_string()
                    })
                    .collect()
            }
        })
    }
}

/// Per-column discretization applied during ingestion.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Binning {
    pub rules: BTreeMap<String, BinRule>,
}

impl Binning {
    pub fn none() -> Self {
        Binning::default()
    }

    /// Income binarized at 50 000, age cut into five equal-width brackets.
    pub fn acs_default() -> Self {
        let mut rules = BTreeMap::new();
        rules.insert("INCTOT".to_string(), BinRule::Threshold { threshold: 50_000.0 });
        rules.insert("AGE".to_string(), BinRule::EqualWidth { bins: 5 });
        Binning { rules }
    }

    pub fn with_rule(mut self, column: &str, rule: BinRule) -> Self {
        self.rules.insert(column.to_string(), rule);
        self
    }
}

/// Reads a comma-separated file with a header row. Extra columns are
/// ignored. When `binning` is `None` the ACS defaults apply to whichever of
/// their columns the schema contains.
pub fn load_csv(path: impl AsRef<Path>, schema: Arc<Schema>, binning: Option<&Binning>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema, binning)
}

pub fn read_csv<R: Read>(input: R, schema: Arc<Schema>, binning: Option<&Binning>) -> Result<Dataset> {
    let default_binning;
    let binning = match binning {
        Some(b) => b,
        None => {
            default_binning = Binning::acs_default();
            &default_binning
        }
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = reader.headers()?.clone();
    let mut column_of = Vec::with_capacity(schema.num_attributes());
    for attr in schema.attributes() {
        let col = headers
            .iter()
            .position(|h| h.trim() == attr.name)
            .ok_or_else(|| Error::Schema(format!("CSV has no column {}", attr.name)))?;
        column_of.push(col);
    }

    let mut columns: Vec<Vec<String>> = vec![Vec::new(); schema.num_attributes()];
    for record in reader.records() {
        let record = record?;
        for (a, &col) in column_of.iter().enumerate() {
            columns[a].push(record.get(col).unwrap_or("").trim().to_string());
        }
    }
    for (a, attr) in schema.attributes().iter().enumerate() {
        if let Some(rule) = binning.rules.get(&attr.name) {
            columns[a] = rule.apply(&attr.name, &columns[a])?;
        }
    }

    let m = columns.first().map_or(0, Vec::len);
    let mut rows = Vec::with_capacity(m);
    for r in 0..m {
        let mut row = Vec::with_capacity(columns.len());
        for (a, attr) in schema.attributes().iter().enumerate() {
            let label = &columns[a][r];
            let v = attr.position(label).ok_or_else(|| Error::Row {
                row: r,
                message: format!("{label:?} is not in the domain of {}", attr.name),
            })?;
            row.push(v as u32);
        }
        rows.push(row);
    }
    Dataset::from_indices(schema, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Attribute;

    fn acs_schema() -> Arc<Schema> {
        Arc::new(
            Schema::new(vec![
                Attribute::categorical("RACE", ["1", "2"]).quasi_identifier(),
                Attribute::categorical("SEX", ["1", "2"]),
                Attribute::categorical("AGE", ["0", "1", "2", "3", "4"]),
                Attribute::categorical("INCTOT", ["0", "1"]),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn reads_three_rows() {
        let schema = Arc::new(
            Schema::new(vec![
                Attribute::categorical("A", ["x", "y"]),
                Attribute::categorical("B", ["u", "v"]),
            ])
            .unwrap(),
        );
        let csv = "B,A,extra\nu,x,1\nv,y,2\nv,x,3\n";
        let d = read_csv(csv.as_bytes(), schema, Some(&Binning::none())).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.row_labels(1), vec!["y", "v"]);
    }

    #[test]
    fn income_above_threshold_is_one() {
        let csv = "RACE,SEX,AGE,INCTOT\n1,1,20,50001\n2,2,60,50000\n1,2,40,0\n";
        let d = read_csv(csv.as_bytes(), acs_schema(), None).unwrap();
        assert_eq!(d.row_labels(0)[3], "1");
        assert_eq!(d.row_labels(1)[3], "0");
        // ages 20..60 in five brackets of width 8
        assert_eq!(d.row_labels(0)[2], "0");
        assert_eq!(d.row_labels(1)[2], "4");
        assert_eq!(d.row_labels(2)[2], "2");
    }

    #[test]
    fn missing_column_is_named() {
        let csv = "RACE,AGE,INCTOT\n1,20,1\n";
        let err = read_csv(csv.as_bytes(), acs_schema(), None).unwrap_err();
        assert!(matches!(err, Error::Schema(ref m) if m.contains("SEX")), "{err}");
    }

    #[test]
    fn out_of_domain_reports_row() {
        let csv = "RACE,SEX,AGE,INCTOT\n1,1,20,1\n7,1,30,1\n";
        let err = read_csv(csv.as_bytes(), acs_schema(), None).unwrap_err();
        assert!(matches!(err, Error::Row { row: 1, .. }), "{err}");
    }

    #[test]
    fn non_numeric_binned_column_is_an_error() {
        let csv = "RACE,SEX,AGE,INCTOT\n1,1,old,1\n";
        assert!(read_csv(csv.as_bytes(), acs_schema(), None).is_err());
    }
}
