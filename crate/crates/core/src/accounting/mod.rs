//! Closed-form (ε, δ) for each mechanism, and an exhaustive check of the
//! privacy-loss tail on tiny universes.

mod verifier;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::anonymity::subsampling_rate;
use crate::error::{Error, Result};
use crate::mechanisms::{check_epsilon, retention_probability, MechanismKind};

pub use verifier::{
    enumerable_mechanism, verify_dp_bruteforce, Constant, DpCellSuppression, DpSwapping, EnumerableMechanism,
    Identity, Outcome, Subsampling, VerifierReport, VerifyMode,
};

/// δ = 1 − ¼·e^(−ε(B−k)) for private cell suppression with bound B > k.
pub fn delta_cell_suppression(epsilon: f64, b: u64, k: u64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if k == 0 || k >= b {
        return Err(Error::Domain(format!(
            "suppression accounting needs 1 ≤ k < B, got k = {k}, B = {b}"
        )));
    }
    Ok(1.0 - 0.25 * (-epsilon * (b - k) as f64).exp())
}

/// δ = 1 − (1 − γ²)/(n_Q − 1) − ((1 − γ)/(n_Q − 1))² for private swapping.
pub fn delta_swapping(epsilon: f64, n_q: usize) -> Result<f64> {
    check_epsilon(epsilon)?;
    if n_q < 2 {
        return Err(Error::Domain(format!("swapping accounting needs n_Q ≥ 2, got {n_q}")));
    }
    let gamma = retention_probability(epsilon, n_q);
    let m = (n_q - 1) as f64;
    Ok(1.0 - (1.0 - gamma * gamma) / m - ((1.0 - gamma) / m).powi(2))
}

/// ln(i!) for i = 0..=n.
fn ln_factorials(n: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        out.push(acc);
    }
    out
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn binomial_cdf_with(ln_fact: &[f64], nu: u64, w: u64, beta: f64) -> f64 {
    if nu >= w {
        return 1.0;
    }
    let (lb, lq) = (beta.ln(), (-beta).ln_1p());
    let terms: Vec<f64> = (0..=nu)
        .map(|j| {
            ln_fact[w as usize] - ln_fact[j as usize] - ln_fact[(w - j) as usize]
                + j as f64 * lb
                + (w - j) as f64 * lq
        })
        .collect();
    log_sum_exp(&terms).exp().min(1.0)
}

/// Pr[Binomial(w, β) ≤ ν], summed in log space.
pub fn binomial_cdf(nu: u64, w: u64, beta: f64) -> f64 {
    binomial_cdf_with(&ln_factorials(w), nu, w, beta)
}

/// The minimizing `w` and the resulting δ for subsample-then-anonymize:
/// δ = 1 − min_{w ∈ 1..=B} Pr[Bin(w, β) ≤ ⌊(1 − e^(−ε))w⌋]². The
/// guarantee does not depend on k.
pub fn delta_kanonymity_detail(epsilon: f64, beta: f64, b: u64) -> Result<(u64, f64)> {
    check_epsilon(epsilon)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Parameter(format!("beta must lie in (0, 1), got {beta}")));
    }
    if b == 0 {
        return Err(Error::Domain("k-anonymity accounting needs B ≥ 1".into()));
    }
    let ln_fact = ln_factorials(b);
    let rate = -(-epsilon).exp_m1();
    let mut best = (1, f64::INFINITY);
    for w in 1..=b {
        let nu = (rate * w as f64).floor() as u64;
        let cdf = binomial_cdf_with(&ln_fact, nu, w, beta);
        if cdf < best.1 {
            best = (w, cdf);
        }
    }
    Ok((best.0, 1.0 - best.1 * best.1))
}

pub fn delta_kanonymity(epsilon: f64, beta: f64, b: u64) -> Result<f64> {
    delta_kanonymity_detail(epsilon, beta, b).map(|(_, d)| d)
}

/// ε' = ½ε² + ε·√(2 ln(1/δ)), the approximate-DP level of the discrete
/// Gaussian with parameter ε at failure probability δ.
pub fn gaussian_dp_parameters(epsilon: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1], got {delta}")));
    }
    Ok(0.5 * epsilon * epsilon + epsilon * (2.0 * (1.0 / delta).ln()).sqrt())
}

/// Inputs the closed forms draw on. Unused fields are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccountingParams {
    /// B, the largest count of the histogram.
    pub b: u64,
    pub k: u64,
    pub n_q: usize,
    pub beta: Option<f64>,
}

/// One (mechanism, ε, δ) line of the accounting table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub mechanism: MechanismKind,
    pub epsilon: f64,
    /// `None` where no closed form is available (discrete Gaussian).
    pub delta: Option<f64>,
    pub parameters: BTreeMap<String, f64>,
}

/// The analytic δ of `mechanism` at budget `epsilon`. Deterministic
/// traditional methods and the identity get δ = 1.
pub fn delta_report(mechanism: MechanismKind, epsilon: f64, params: &AccountingParams) -> Result<DeltaReport> {
    let mut parameters = BTreeMap::new();
    let delta = match mechanism {
        MechanismKind::Laplace => {
            check_epsilon(epsilon)?;
            Some(0.0)
        }
        MechanismKind::DiscreteGaussian => {
            check_epsilon(epsilon)?;
            None
        }
        MechanismKind::DpCellSuppression => {
            parameters.insert("B".into(), params.b as f64);
            parameters.insert("k".into(), params.k as f64);
            Some(delta_cell_suppression(epsilon, params.b, params.k)?)
        }
        MechanismKind::DpSwapping => {
            parameters.insert("n_Q".into(), params.n_q as f64);
            Some(delta_swapping(epsilon, params.n_q)?)
        }
        MechanismKind::DpKAnonymity => {
            let beta = match params.beta {
                Some(beta) => beta,
                None => subsampling_rate(epsilon)?,
            };
            let (w, delta) = delta_kanonymity_detail(epsilon, beta, params.b)?;
            parameters.insert("B".into(), params.b as f64);
            parameters.insert("beta".into(), beta);
            parameters.insert("w".into(), w as f64);
            Some(delta)
        }
        MechanismKind::CellSuppression
        | MechanismKind::Swapping
        | MechanismKind::KAnonymity
        | MechanismKind::Identity => Some(1.0),
    };
    Ok(DeltaReport {
        mechanism,
        epsilon,
        delta,
        parameters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suppression_delta() {
        let d = delta_cell_suppression(1.0, 10, 6).unwrap();
        assert!((d - (1.0 - 0.25 * (-4f64).exp())).abs() < 1e-15);
        assert!((delta_cell_suppression(1e-9, 7, 6).unwrap() - 0.75).abs() < 1e-6);
        assert!(matches!(delta_cell_suppression(1.0, 6, 6), Err(Error::Domain(_))));
    }

    #[test]
    fn swapping_delta_limits() {
        assert!((delta_swapping(50.0, 9).unwrap() - 1.0).abs() < 1e-12);
        assert!(delta_swapping(1.0, 1).is_err());
    }

    #[test]
    fn single_record_bound() {
        let beta = 0.3;
        let d = delta_kanonymity(1.0, beta, 1).unwrap();
        assert!((d - (1.0 - (1.0 - beta) * (1.0 - beta))).abs() < 1e-14);
    }

    #[test]
    fn cdf_edges() {
        assert_eq!(binomial_cdf(5, 5, 0.4), 1.0);
        assert!((binomial_cdf(0, 3, 0.5) - 0.125).abs() < 1e-15);
        assert!((binomial_cdf(1, 2, 0.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn gaussian_conversion() {
        assert!((gaussian_dp_parameters(2.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((gaussian_dp_parameters(1.0, (-0.5f64).exp()).unwrap() - 1.5).abs() < 1e-12);
        assert!(gaussian_dp_parameters(1.0, 0.0).is_err());
    }

    #[test]
    fn reports_carry_parameters() {
        let params = AccountingParams {
            b: 50,
            k: 6,
            n_q: 9,
            beta: None,
        };
        let r = delta_report(MechanismKind::DpKAnonymity, 1.0, &params).unwrap();
        assert_eq!(r.parameters["w"], 3.0);
        assert!(delta_report(MechanismKind::DiscreteGaussian, 1.0, &params).unwrap().delta.is_none());
        assert_eq!(delta_report(MechanismKind::Laplace, 1.0, &params).unwrap().delta, Some(0.0));
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"dp_k_anonymity\""));
    }
}
