use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tabular::Schema;

/// Microdata: `m` records, each stored as one domain index per attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Arc<Schema>,
    rows: Vec<Vec<u32>>,
}

impl Dataset {
    pub fn empty(schema: Arc<Schema>) -> Self {
        Dataset {
            schema,
            rows: Vec::new(),
        }
    }

    pub fn from_indices(schema: Arc<Schema>, rows: Vec<Vec<u32>>) -> Result<Self> {
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.num_attributes() {
                return Err(Error::Row {
                    row: r,
                    message: format!(
                        "expected {} values, found {}",
                        schema.num_attributes(),
                        row.len()
                    ),
                });
            }
            for (a, &v) in row.iter().enumerate() {
                if v as usize >= schema.attribute(a).domain_size() {
                    return Err(Error::Row {
                        row: r,
                        message: format!(
                            "value index {v} outside domain of {}",
                            schema.attribute(a).name
                        ),
                    });
                }
            }
        }
        Ok(Dataset { schema, rows })
    }

    pub fn from_labels<S: AsRef<str>>(schema: Arc<Schema>, rows: &[Vec<S>]) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.num_attributes() {
                return Err(Error::Row {
                    row: r,
                    message: format!(
                        "expected {} values, found {}",
                        schema.num_attributes(),
                        row.len()
                    ),
                });
            }
            let mut values = Vec::with_capacity(row.len());
            for (a, label) in row.iter().enumerate() {
                let attr = schema.attribute(a);
                let v = attr.position(label.as_ref()).ok_or_else(|| Error::Row {
                    row: r,
                    message: format!("{:?} is not in the domain of {}", label.as_ref(), attr.name),
                })?;
                values.push(v as u32);
            }
            out.push(values);
        }
        Ok(Dataset { schema, rows: out })
    }

    pub(crate) fn from_rows_unchecked(schema: Arc<Schema>, rows: Vec<Vec<u32>>) -> Self {
        Dataset { schema, rows }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row_labels(&self, row: usize) -> Vec<&str> {
        self.rows[row]
            .iter()
            .enumerate()
            .map(|(a, &v)| self.schema.attribute(a).domain[v as usize].as_str())
            .collect()
    }

    pub fn cell_of(&self, row: usize) -> usize {
        self.schema.cell_index(&self.rows[row])
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(self.schema.attributes().iter().map(|a| a.name.as_str()))?;
        for r in 0..self.rows.len() {
            writer.write_record(self.row_labels(r))?;
        }
        writer.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
