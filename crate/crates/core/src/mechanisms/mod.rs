//! Randomized release mechanisms on histograms and microdata, plus the
//! deterministic traditional baselines they are compared against.

mod discrete_gaussian;
mod noise;
mod suppression;
mod swapping;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use discrete_gaussian::DiscreteGaussian;
pub use noise::{discrete_gaussian_mechanism, laplace_mechanism, nonneg_project, sample_laplace};
pub use suppression::{
    cell_suppression, dp_cell_suppression, dp_cell_suppression_values, SuppressedFill,
    SuppressionVariant,
};
pub use swapping::{dp_swapping, retention_probability, swap_distance, swapping};

/// The pseudo-random source every mechanism draws from.
pub type DpRng = ChaCha20Rng;

pub fn seeded_rng(seed: u64) -> DpRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Seed for the `index`-th independent repetition of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_add(index)
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("epsilon must be positive and finite, got {epsilon}")))
    }
}

pub(crate) fn check_k(k: u64) -> Result<()> {
    if k >= 1 {
        Ok(())
    } else {
        Err(Error::Parameter("k must be at least 1".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    Laplace,
    DiscreteGaussian,
    CellSuppression,
    DpCellSuppression,
    Swapping,
    DpSwapping,
    KAnonymity,
    DpKAnonymity,
    Identity,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 9] = [
        MechanismKind::Laplace,
        MechanismKind::DiscreteGaussian,
        MechanismKind::CellSuppression,
        MechanismKind::DpCellSuppression,
        MechanismKind::Swapping,
        MechanismKind::DpSwapping,
        MechanismKind::KAnonymity,
        MechanismKind::DpKAnonymity,
        MechanismKind::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::Laplace => "laplace",
            MechanismKind::DiscreteGaussian => "discrete_gaussian",
            MechanismKind::CellSuppression => "cell_suppression",
            MechanismKind::DpCellSuppression => "dp_cell_suppression",
            MechanismKind::Swapping => "swapping",
            MechanismKind::DpSwapping => "dp_swapping",
            MechanismKind::KAnonymity => "k_anonymity",
            MechanismKind::DpKAnonymity => "dp_k_anonymity",
            MechanismKind::Identity => "identity",
        }
    }

    pub fn is_private(self) -> bool {
        matches!(
            self,
            MechanismKind::Laplace
                | MechanismKind::DiscreteGaussian
                | MechanismKind::DpCellSuppression
                | MechanismKind::DpSwapping
                | MechanismKind::DpKAnonymity
        )
    }

    /// The traditional method a private mechanism stands in for, if any.
    pub fn traditional_counterpart(self) -> Option<MechanismKind> {
        match self {
            MechanismKind::DpCellSuppression => Some(MechanismKind::CellSuppression),
            MechanismKind::DpSwapping => Some(MechanismKind::Swapping),
            MechanismKind::DpKAnonymity => Some(MechanismKind::KAnonymity),
            _ => None,
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        MechanismKind::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown mechanism {s:?}")))
    }
}

/// Parameters shared by the mechanisms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MechanismConfig {
    pub epsilon: f64,
    pub k: u64,
    /// Fraction of records left untouched by traditional swapping.
    pub swap_fraction: f64,
    pub cs_variant: SuppressionVariant,
    pub beta_override: Option<f64>,
}

impl Default for MechanismConfig {
    fn default() -> Self {
        MechanismConfig {
            epsilon: 1.0,
            k: 6,
            swap_fraction: 0.9,
            cs_variant: SuppressionVariant::PerCellNoise,
            beta_override: None,
        }
    }
}

impl MechanismConfig {
    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        check_k(self.k)?;
        if !(0.0..=1.0).contains(&self.swap_fraction) {
            return Err(Error::Parameter(format!(
                "swap_fraction must lie in [0, 1], got {}",
                self.swap_fraction
            )));
        }
        if let Some(beta) = self.beta_override {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::Parameter(format!("beta must lie in (0, 1), got {beta}")));
            }
        }
        Ok(())
    }
}
