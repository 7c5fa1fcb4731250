//! ℓ2-regularized logistic regression on one-hot categorical features,
//! trained by full-batch gradient descent.
//!
//! Training works on a histogram: every cell is one feature pattern with a
//! label and a (possibly fractional) weight, so a privatized count vector
//! trains directly without materializing records.

use da_core::tabular::{build_histogram, Dataset, Histogram, Schema};
use serde::{Deserialize, Serialize};

use crate::config::Hyperparams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    /// Intercept first, then one weight per (feature attribute, value) in
    /// schema order: length Σ domain sizes + 1.
    pub weights: Vec<f64>,
    pub feature_attrs: Vec<usize>,
    pub label_attr: usize,
    pub hyperparams: Hyperparams,
    pub iterations_run: usize,
    pub converged: bool,
    /// Set when training saw a single class (or no data) and fell back to
    /// an intercept-only model.
    pub degenerate: bool,
}

/// Weighted training examples, one per histogram cell.
struct Design {
    /// Active one-hot columns (offsets into the weight vector, intercept excluded).
    active: Vec<Vec<usize>>,
    labels: Vec<f64>,
    weights: Vec<f64>,
    dim: usize,
}

fn resolve(schema: &Schema, label: &str, features: &[String]) -> Result<(usize, Vec<usize>)> {
    let find = |name: &str| {
        schema
            .index_of(name)
            .ok_or_else(|| Error::Config(format!("schema has no attribute {name}")))
    };
    let label_attr = find(label)?;
    if schema.attribute(label_attr).domain_size() != 2 {
        return Err(Error::Config(format!("label {label} is not binary")));
    }
    let feature_attrs = features.iter().map(|f| find(f)).collect::<Result<Vec<_>>>()?;
    if feature_attrs.contains(&label_attr) {
        return Err(Error::Config(format!("label {label} is also a feature")));
    }
    Ok((label_attr, feature_attrs))
}

fn design(schema: &Schema, label_attr: usize, feature_attrs: &[usize], weights: &[f64]) -> Design {
    let offsets: Vec<usize> = feature_attrs
        .iter()
        .scan(0, |acc, &a| {
            let o = *acc;
            *acc += schema.attribute(a).domain_size();
            Some(o)
        })
        .collect();
    let dim = feature_attrs.iter().map(|&a| schema.attribute(a).domain_size()).sum::<usize>() + 1;
    let mut d = Design {
        active: Vec::new(),
        labels: Vec::new(),
        weights: Vec::new(),
        dim,
    };
    for (cell, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        let values = schema.cell_values(cell);
        d.active.push(
            feature_attrs
                .iter()
                .zip(&offsets)
                .map(|(&a, &o)| 1 + o + values[a] as usize)
                .collect(),
        );
        d.labels.push(f64::from(values[label_attr]));
        d.weights.push(w);
    }
    d
}

fn logit(theta: &[f64], active: &[usize]) -> f64 {
    theta[0] + active.iter().map(|&j| theta[j]).sum::<f64>()
}

/// ln(1 + eᶻ) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Weighted mean log-loss plus ½·λ‖w‖² over the non-intercept weights.
fn objective(d: &Design, theta: &[f64], l2: f64) -> f64 {
    let total: f64 = d.weights.iter().sum();
    let data: f64 = d
        .active
        .iter()
        .zip(&d.labels)
        .zip(&d.weights)
        .map(|((a, &y), &w)| {
            let z = logit(theta, a);
            w * (softplus(z) - y * z)
        })
        .sum();
    data / total + 0.5 * l2 * theta[1..].iter().map(|t| t * t).sum::<f64>()
}

fn gradient(d: &Design, theta: &[f64], l2: f64, grad: &mut [f64]) {
    let total: f64 = d.weights.iter().sum();
    grad.iter_mut().for_each(|g| *g = 0.0);
    for ((a, &y), &w) in d.active.iter().zip(&d.labels).zip(&d.weights) {
        let r = w * (sigmoid(logit(theta, a)) - y) / total;
        grad[0] += r;
        for &j in a {
            grad[j] += r;
        }
    }
    for (g, t) in grad[1..].iter_mut().zip(&theta[1..]) {
        *g += l2 * t;
    }
}

/// Trains on per-cell weights over `schema`'s universe.
pub fn train_weighted(
    schema: &Schema,
    cell_weights: &[f64],
    label: &str,
    features: &[String],
    hp: &Hyperparams,
) -> Result<ClassifierModel> {
    if cell_weights.len() != schema.universe_size() {
        return Err(Error::Core(da_core::Error::Structure(format!(
            "{} weights for a universe of {} cells",
            cell_weights.len(),
            schema.universe_size()
        ))));
    }
    let (label_attr, feature_attrs) = resolve(schema, label, features)?;
    let d = design(schema, label_attr, &feature_attrs, cell_weights);
    let mut model = ClassifierModel {
        weights: vec![0.0; d.dim],
        feature_attrs,
        label_attr,
        hyperparams: *hp,
        iterations_run: 0,
        converged: false,
        degenerate: false,
    };

    let total: f64 = d.weights.iter().sum();
    let positive: f64 = d.labels.iter().zip(&d.weights).map(|(y, w)| y * w).sum();
    if total <= 0.0 || positive <= 0.0 || positive >= total {
        log::warn!("training data holds a single class; fitting an intercept-only model");
        let rate = (positive + 0.5) / (total + 1.0);
        model.weights[0] = (rate / (1.0 - rate)).ln();
        model.degenerate = true;
        return Ok(model);
    }

    let mut grad = vec![0.0; d.dim];
    for it in 0..hp.iterations {
        gradient(&d, &model.weights, hp.l2, &mut grad);
        if grad.iter().map(|g| g * g).sum::<f64>().sqrt() < hp.tolerance {
            model.converged = true;
            model.iterations_run = it;
            return Ok(model);
        }
        for (t, g) in model.weights.iter_mut().zip(&grad) {
            *t -= hp.learning_rate * g;
        }
    }
    model.iterations_run = hp.iterations;
    Ok(model)
}

pub fn train_logistic(dataset: &Dataset, label: &str, features: &[String], hp: &Hyperparams) -> Result<ClassifierModel> {
    let hist = build_histogram(dataset);
    train_weighted(dataset.schema(), &hist.as_f64(), label, features, hp)
}

impl ClassifierModel {
    fn active(&self, schema: &Schema, values: &[u32]) -> Vec<usize> {
        let mut offset = 1;
        self.feature_attrs
            .iter()
            .map(|&a| {
                let j = offset + values[a] as usize;
                offset += schema.attribute(a).domain_size();
                j
            })
            .collect()
    }

    /// Pr[label = second domain value] for a record given as value indices.
    pub fn probability(&self, schema: &Schema, values: &[u32]) -> f64 {
        sigmoid(logit(&self.weights, &self.active(schema, values)))
    }

    pub fn predict(&self, schema: &Schema, values: &[u32]) -> u32 {
        u32::from(self.probability(schema, values) > 0.5)
    }

    /// Fraction of the records in `hist` whose label is predicted correctly.
    pub fn accuracy(&self, hist: &Histogram) -> f64 {
        let schema = hist.schema();
        let correct: u64 = hist
            .counts()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .filter_map(|(cell, &c)| {
                let values = schema.cell_values(cell);
                (self.predict(schema, &values) == values[self.label_attr]).then_some(c)
            })
            .sum();
        correct as f64 / hist.total() as f64
    }

    /// The training objective of this model on the records in `hist`.
    pub fn loss(&self, hist: &Histogram) -> f64 {
        let d = design(hist.schema(), self.label_attr, &self.feature_attrs, &hist.as_f64());
        objective(&d, &self.weights, self.hyperparams.l2)
    }
}
