use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use da_core::mechanisms::{MechanismConfig, MechanismKind, SuppressionVariant};
use da_core::tabular::{load_csv, Binning, Dataset, Schema};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth;

/// Where the experiment's microdata comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum DataSource {
    /// A CSV extract plus its schema file. Without `binning` the ACS
    /// defaults apply.
    Csv {
        path: PathBuf,
        schema: PathBuf,
        #[serde(default)]
        binning: Option<Binning>,
    },
    Synthetic {
        #[serde(default = "default_rows")]
        rows: usize,
        #[serde(default = "default_data_seed")]
        seed: u64,
    },
}

fn default_rows() -> usize {
    synth::BUNDLED_ROWS
}

fn default_data_seed() -> u64 {
    synth::BUNDLED_SEED
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic {
            rows: default_rows(),
            seed: default_data_seed(),
        }
    }
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Csv { path, schema, binning } => {
                let schema = Schema::load(schema).map_err(|e| Error::Config(e.to_string()))?;
                Ok(load_csv(path, Arc::new(schema), binning.as_ref())?)
            }
            DataSource::Synthetic { rows, seed } => synth::synthetic_dataset(*rows, *seed),
        }
    }

    fn resolve(&mut self, base: &Path) {
        if let DataSource::Csv { path, schema, .. } = self {
            for p in [path, schema] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub iterations: usize,
    pub l2: f64,
    /// Training stops once the gradient norm drops below this.
    pub tolerance: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            learning_rate: 0.1,
            iterations: 2000,
            l2: 1e-4,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub epsilons: Vec<f64>,
    /// Threshold for suppression and k-anonymity in release and
    /// classification runs.
    pub k: u64,
    /// Sweep values for the suppression threshold and k-anonymity axes.
    pub ks: Vec<u64>,
    pub swap_fraction: f64,
    pub swap_fractions: Vec<f64>,
    pub suppression_variant: SuppressionVariant,
    pub beta_override: Option<f64>,
    pub repetitions: usize,
    pub seed: u64,
    pub mechanisms: Vec<String>,
    pub output_dir: PathBuf,
    pub label: String,
    pub features: Vec<String>,
    pub classifier: Hyperparams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataSource::default(),
            epsilons: vec![0.5, 1.0, 2.0, 4.0],
            k: 6,
            ks: vec![1, 2, 4, 6, 8, 10],
            swap_fraction: 0.9,
            swap_fractions: vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            suppression_variant: SuppressionVariant::PerCellNoise,
            beta_override: None,
            repetitions: 200,
            seed: 0,
            mechanisms: MechanismKind::ALL
                .iter()
                .filter(|&&m| m != MechanismKind::Identity)
                .map(|m| m.name().to_string())
                .collect(),
            output_dir: PathBuf::from("results"),
            label: "INCTOT".into(),
            features: ["RACE", "SEX", "OWNERSHP", "AGE"].map(String::from).to_vec(),
            classifier: Hyperparams::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn from_str_any(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative data paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_str_any(&text)?;
        cfg.data.resolve(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::Config(format!("epsilon values must be positive, got {e}")));
        }
        if let Some(f) = self.swap_fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(Error::Config(format!("swap fractions must lie in [0, 1], got {f}")));
        }
        if self.ks.contains(&0) {
            return Err(Error::Config("sweep thresholds must be at least 1".into()));
        }
        self.mechanism_kinds()?;
        self.mechanism_config(1.0).validate().map_err(|e| Error::Config(e.to_string()))?;
        let hp = &self.classifier;
        if !(hp.learning_rate > 0.0 && hp.l2 >= 0.0 && hp.tolerance >= 0.0) {
            return Err(Error::Config("classifier hyperparameters out of range".into()));
        }
        Ok(())
    }

    pub fn mechanism_kinds(&self) -> Result<Vec<MechanismKind>> {
        self.mechanisms
            .iter()
            .map(|m| MechanismKind::from_str(m).map_err(|e| Error::Config(e.to_string())))
            .collect()
    }

    pub fn mechanism_config(&self, epsilon: f64) -> MechanismConfig {
        MechanismConfig {
            epsilon,
            k: self.k,
            swap_fraction: self.swap_fraction,
            cs_variant: self.suppression_variant,
            beta_override: self.beta_override,
        }
    }
}
