use rand::Rng;

use crate::error::Result;
use crate::mechanisms::discrete_gaussian::DiscreteGaussian;
use crate::mechanisms::check_epsilon;
use crate::tabular::Histogram;

/// One draw from Laplace(0, scale) by inversion.
pub fn sample_laplace<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen::<f64>() - 0.5;
        let tail = 1.0 - 2.0 * u.abs();
        if tail > 0.0 {
            return -scale * u.signum() * tail.ln();
        }
    }
}

/// x + Lap(2/ε) on every cell.
pub fn laplace_mechanism<R: Rng + ?Sized>(hist: &Histogram, epsilon: f64, rng: &mut R) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    let scale = 2.0 / epsilon;
    Ok(hist
        .counts()
        .iter()
        .map(|&x| x as f64 + sample_laplace(scale, rng))
        .collect())
}

/// x + N_ℤ(0, 4/ε²) on every cell, sampled exactly.
pub fn discrete_gaussian_mechanism<R: Rng + ?Sized>(
    hist: &Histogram,
    epsilon: f64,
    rng: &mut R,
) -> Result<Vec<i64>> {
    let sampler = DiscreteGaussian::for_epsilon(epsilon)?;
    Ok(hist
        .counts()
        .iter()
        .map(|&x| x as i64 + sampler.sample(rng))
        .collect())
}

/// Clamp at zero, then round half up.
pub fn nonneg_project(values: &[f64]) -> Vec<u64> {
    values
        .iter()
        .map(|&v| {
            let v = if v.is_nan() { 0.0 } else { v.max(0.0) };
            (v + 0.5).floor() as u64
        })
        .collect()
}
