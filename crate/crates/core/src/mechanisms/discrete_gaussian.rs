//! Exact sampling from the discrete Gaussian N_ℤ(0, σ²) using only rational
//! arithmetic: Bernoulli(exp(−γ)) by von Neumann's series trick, a discrete
//! Laplace proposal, then rejection (Canonne, Kamath & Steinke, 2020).

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};

type Rational = Ratio<BigUint>;

fn bernoulli<R: Rng + ?Sized>(p: &Rational, rng: &mut R) -> bool {
    debug_assert!(p <= &Rational::one());
    let d = p.denom();
    // uniform on {0, …, d−1}; success when below the numerator
    rng.gen_biguint_below(d) < *p.numer()
}

fn bernoulli_exp_unit<R: Rng + ?Sized>(gamma: &Rational, rng: &mut R) -> bool {
    let mut k = BigUint::one();
    loop {
        if bernoulli(&(gamma / &k), rng) {
            k += 1u8;
        } else {
            return k.bit(0);
        }
    }
}

/// Bernoulli(exp(−γ)) for rational γ ≥ 0.
fn bernoulli_exp<R: Rng + ?Sized>(gamma: &Rational, rng: &mut R) -> bool {
    let one = Rational::one();
    let mut rest = gamma.clone();
    while rest > one {
        if !bernoulli_exp_unit(&one, rng) {
            return false;
        }
        rest -= &one;
    }
    bernoulli_exp_unit(&rest, rng)
}

/// Geometric with success probability 1 − exp(−1/scale); scale = s/t.
fn geometric_exp<R: Rng + ?Sized>(s: &BigUint, t: &BigUint, rng: &mut R) -> BigUint {
    let mut u = rng.gen_biguint_below(t);
    while !bernoulli_exp(&Rational::new(u.clone(), t.clone()), rng) {
        u = rng.gen_biguint_below(t);
    }
    let mut v = BigUint::zero();
    while bernoulli_exp_unit(&Rational::one(), rng) {
        v += 1u8;
    }
    (u + t * v) / s
}

/// Discrete Laplace with integer scale `t`: Pr[Y = y] ∝ exp(−|y|/t).
fn discrete_laplace<R: Rng + ?Sized>(t: &BigUint, rng: &mut R) -> BigInt {
    let one = BigUint::one();
    loop {
        let negative = rng.gen_bool(0.5);
        let y = geometric_exp(&one, t, rng);
        if negative && y.is_zero() {
            continue;
        }
        let y = BigInt::from(y);
        return if negative { -y } else { y };
    }
}

/// A discrete Gaussian sampler parameterized by its variance parameter σ².
#[derive(Debug, Clone)]
pub struct DiscreteGaussian {
    sigma2: Rational,
    t: BigUint,
    shift: Rational,
    two_sigma2: Rational,
}

impl DiscreteGaussian {
    pub fn new(sigma2: Rational) -> Result<Self> {
        if sigma2.is_zero() {
            return Err(Error::Parameter("discrete Gaussian needs σ² > 0".into()));
        }
        // t = ⌊σ⌋ + 1, with ⌊σ⌋ = ⌊√⌊σ²⌋⌋
        let t = sigma2.to_integer().sqrt() + BigUint::one();
        let shift = &sigma2 / &t;
        let two_sigma2 = &sigma2 * BigUint::from(2u8);
        Ok(DiscreteGaussian {
            sigma2,
            t,
            shift,
            two_sigma2,
        })
    }

    /// σ² = 4/ε² with ε converted exactly from its binary representation.
    pub fn for_epsilon(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
        }
        let eps = BigRational::from_float(epsilon)
            .ok_or_else(|| Error::Parameter(format!("epsilon {epsilon} is not finite")))?;
        let eps = Rational::new(
            eps.numer().abs().to_biguint().expect("non-negative"),
            eps.denom().to_biguint().expect("positive"),
        );
        let sigma2 = Rational::from_integer(BigUint::from(4u8)) / (&eps * &eps);
        DiscreteGaussian::new(sigma2)
    }

    pub fn variance_parameter(&self) -> f64 {
        self.sigma2.numer().to_f64().unwrap_or(f64::INFINITY)
            / self.sigma2.denom().to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        loop {
            let y = discrete_laplace(&self.t, rng);
            let y_abs = Rational::from_integer(y.magnitude().clone());
            let diff = if y_abs >= self.shift {
                &y_abs - &self.shift
            } else {
                &self.shift - &y_abs
            };
            let gamma = &diff * &diff / &self.two_sigma2;
            if bernoulli_exp(&gamma, rng) {
                return y.to_i64().expect("discrete Gaussian sample fits in i64");
            }
        }
    }
}
