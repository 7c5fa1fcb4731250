use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    #[default]
    Categorical,
    /// Ordered attribute whose labels parse as numbers, listed in ascending order.
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub domain: Vec<String>,
    #[serde(default)]
    pub kind: AttributeKind,
    #[serde(default)]
    pub quasi_identifier: bool,
}

impl Attribute {
    pub fn categorical<S: Into<String>>(name: &str, domain: impl IntoIterator<Item = S>) -> Self {
        Attribute {
            name: name.to_string(),
            domain: domain.into_iter().map(Into::into).collect(),
            kind: AttributeKind::Categorical,
            quasi_identifier: false,
        }
    }

    pub fn numeric<S: Into<String>>(name: &str, domain: impl IntoIterator<Item = S>) -> Self {
        Attribute {
            kind: AttributeKind::Numeric,
            ..Attribute::categorical(name, domain)
        }
    }

    pub fn quasi_identifier(mut self) -> Self {
        self.quasi_identifier = true;
        self
    }

    pub fn domain_size(&self) -> usize {
        self.domain.len()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.domain.iter().position(|d| d == label)
    }

    /// Numeric value of the `index`-th label; the index itself for categorical attributes.
    pub fn numeric_value(&self, index: usize) -> f64 {
        match self.kind {
            AttributeKind::Numeric => self.domain[index].parse().unwrap_or(index as f64),
            AttributeKind::Categorical => index as f64,
        }
    }
}

#[derive(Debug, Deserialize)]
struct SchemaFile {
    #[serde(alias = "attributes")]
    attribute: Vec<Attribute>,
}

/// Ordered attributes A₁…A_d, their domains, and the quasi-identifier split.
///
/// Universe cells are enumerated lexicographically in attribute order, the
/// first attribute being the most significant digit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    attributes: Vec<Attribute>,
    strides: Vec<usize>,
    quasi_identifiers: Vec<usize>,
    non_quasi_identifiers: Vec<usize>,
    universe_size: usize,
    qi_universe_size: usize,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::Schema("schema has no attributes".into()));
        }
        let mut seen = HashSet::new();
        for attr in &attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute {}", attr.name)));
            }
            if attr.domain.is_empty() {
                return Err(Error::Schema(format!("attribute {} has an empty domain", attr.name)));
            }
            let mut labels = HashSet::new();
            for label in &attr.domain {
                if !labels.insert(label.as_str()) {
                    return Err(Error::Schema(format!(
                        "attribute {} lists {label:?} twice",
                        attr.name
                    )));
                }
            }
            if attr.kind == AttributeKind::Numeric {
                let values = attr
                    .domain
                    .iter()
                    .map(|l| {
                        l.parse::<f64>().map_err(|_| {
                            Error::Schema(format!("numeric attribute {} has label {l:?}", attr.name))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                if values.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Schema(format!(
                        "numeric attribute {} must list its domain in ascending order",
                        attr.name
                    )));
                }
            }
        }

        let mut strides = vec![1usize; attributes.len()];
        let mut size: usize = 1;
        for (i, attr) in attributes.iter().enumerate().rev() {
            strides[i] = size;
            size = size
                .checked_mul(attr.domain.len())
                .ok_or_else(|| Error::Schema("universe size overflows".into()))?;
        }
        let (quasi_identifiers, non_quasi_identifiers): (Vec<usize>, Vec<usize>) =
            (0..attributes.len()).partition(|&i| attributes[i].quasi_identifier);
        let qi_universe_size = quasi_identifiers
            .iter()
            .map(|&i| attributes[i].domain.len())
            .product();

        Ok(Schema {
            attributes,
            strides,
            quasi_identifiers,
            non_quasi_identifiers,
            universe_size: size,
            qi_universe_size,
        })
    }

    /// Parses a schema description. Both TOML (`[[attribute]]` tables) and
    /// JSON (`{"attributes": [...]}`) are accepted.
    pub fn from_str_any(text: &str) -> Result<Self> {
        let parsed: SchemaFile = match serde_json::from_str(text) {
            Ok(file) => file,
            Err(_) => toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?,
        };
        Schema::new(parsed.attribute)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Schema::from_str_any(&text)
    }

    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            attribute: &'a [Attribute],
        }
        toml::to_string(&Out {
            attribute: &self.attributes,
        })
        .expect("schema serializes")
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, index: usize) -> &Attribute {
        &self.attributes[index]
    }

    pub fn num_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Attribute indices of Q, in schema order.
    pub fn quasi_identifiers(&self) -> &[usize] {
        &self.quasi_identifiers
    }

    /// Attribute indices of N, in schema order.
    pub fn non_quasi_identifiers(&self) -> &[usize] {
        &self.non_quasi_identifiers
    }

    /// n = |𝒳|
    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    /// n_Q = |𝒳_Q|
    pub fn qi_universe_size(&self) -> usize {
        self.qi_universe_size
    }

    pub fn cell_index(&self, values: &[u32]) -> usize {
        debug_assert_eq!(values.len(), self.attributes.len());
        values
            .iter()
            .zip(&self.strides)
            .map(|(&v, &s)| v as usize * s)
            .sum()
    }

    pub fn cell_values(&self, cell: usize) -> Vec<u32> {
        self.attributes
            .iter()
            .zip(&self.strides)
            .map(|(a, &s)| ((cell / s) % a.domain.len()) as u32)
            .collect()
    }

    pub fn cell_labels(&self, cell: usize) -> Vec<&str> {
        self.cell_values(cell)
            .into_iter()
            .zip(&self.attributes)
            .map(|(v, a)| a.domain[v as usize].as_str())
            .collect()
    }

    fn value_at(&self, cell: usize, attr: usize) -> usize {
        (cell / self.strides[attr]) % self.attributes[attr].domain.len()
    }

    /// Position of the cell's QI tuple a[Q] in the lexicographic enumeration of 𝒳_Q.
    pub fn qi_index(&self, cell: usize) -> usize {
        self.quasi_identifiers.iter().fold(0, |acc, &a| {
            acc * self.attributes[a].domain.len() + self.value_at(cell, a)
        })
    }

    /// Position of the cell's non-QI tuple a[N]; cells sharing it form one group ℐ.
    pub fn non_qi_index(&self, cell: usize) -> usize {
        self.non_quasi_identifiers.iter().fold(0, |acc, &a| {
            acc * self.attributes[a].domain.len() + self.value_at(cell, a)
        })
    }

    /// The cell with the same non-QI tuple as `cell` and QI tuple number `qi`.
    pub fn with_qi_index(&self, cell: usize, qi: usize) -> usize {
        let mut out = cell;
        let mut rest = qi;
        for &a in self.quasi_identifiers.iter().rev() {
            let size = self.attributes[a].domain.len();
            let new = rest % size;
            rest /= size;
            let old = self.value_at(cell, a);
            out = out - old * self.strides[a] + new * self.strides[a];
        }
        out
    }
}
