use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mechanisms::{check_epsilon, check_k, sample_laplace};
use crate::tabular::Histogram;

/// Where the noise enters private cell suppression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuppressionVariant {
    /// Each cell compares xᵢ + Lap(2/ε) against the fixed threshold k.
    #[default]
    PerCellNoise,
    /// One shared threshold k̃ = k + Lap(2/ε) for every cell.
    NoisyThreshold,
}

/// Value written into a suppressed cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuppressedFill {
    /// ⌊k/2⌋, keeping the release integral.
    #[default]
    Floor,
    /// k/2 as a real number.
    Half,
}

impl SuppressedFill {
    fn value(self, threshold: f64) -> f64 {
        match self {
            SuppressedFill::Floor => (threshold / 2.0).floor().max(0.0),
            SuppressedFill::Half => threshold / 2.0,
        }
    }
}

/// Replaces every count below `k` by ⌊k/2⌋.
pub fn cell_suppression(hist: &Histogram, k: u64) -> Histogram {
    let counts = hist
        .counts()
        .iter()
        .map(|&x| if x < k { k / 2 } else { x })
        .collect();
    Histogram::from_counts(hist.schema().clone(), counts).expect("same universe")
}

/// Private cell suppression with the integral ⌊k/2⌋ fill.
pub fn dp_cell_suppression<R: Rng + ?Sized>(
    hist: &Histogram,
    k: u64,
    epsilon: f64,
    rng: &mut R,
    variant: SuppressionVariant,
) -> Result<Histogram> {
    let values = dp_cell_suppression_values(hist, k, epsilon, rng, variant, SuppressedFill::Floor)?;
    let counts = values.into_iter().map(|v| v as u64).collect();
    Histogram::from_counts(hist.schema().clone(), counts)
}

/// Private cell suppression with an explicit fill rule; returns the release
/// as reals so that the `Half` fill survives.
pub fn dp_cell_suppression_values<R: Rng + ?Sized>(
    hist: &Histogram,
    k: u64,
    epsilon: f64,
    rng: &mut R,
    variant: SuppressionVariant,
    fill: SuppressedFill,
) -> Result<Vec<f64>> {
    check_k(k)?;
    check_epsilon(epsilon)?;
    let scale = 2.0 / epsilon;
    let k = k as f64;
    Ok(match variant {
        SuppressionVariant::PerCellNoise => {
            let suppressed = fill.value(k);
            hist.counts()
                .iter()
                .map(|&x| {
                    let x = x as f64;
                    if x + sample_laplace(scale, rng) >= k {
                        x
                    } else {
                        suppressed
                    }
                })
                .collect()
        }
        SuppressionVariant::NoisyThreshold => {
            let noisy_k = k + sample_laplace(scale, rng);
            let suppressed = fill.value(noisy_k).max(0.0);
            hist.counts()
                .iter()
                .map(|&x| if x as f64 >= noisy_k { x as f64 } else { suppressed })
                .collect()
        }
    })
}
