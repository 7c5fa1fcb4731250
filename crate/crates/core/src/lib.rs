//! Disclosure-avoidance mechanisms for histogram release: traditional cell
//! suppression, swapping and k-anonymity, their differentially private
//! counterparts, the Laplace and discrete Gaussian baselines, privacy
//! accounting, and bias/fairness metrics.

pub mod accounting;
pub mod anonymity;
pub mod error;
pub mod mechanisms;
pub mod metrics;
pub mod tabular;

pub use error::{Error, Result};
