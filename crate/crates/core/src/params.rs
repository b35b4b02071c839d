//! Protocol parameters shared by both aggregation protocols and their
//! field-size and threshold checks.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discriminator::{
    DiscriminatorError, DiscriminatorPoly, DEFAULT_COEFFS, DEFAULT_COEFF_SCALE,
};
use crate::field::{p_lower_bound, PrimeModulus};
use crate::sharing::SharingParams;
use crate::Real;

pub const DEFAULT_EPSILON: f64 = 0.02;
pub const DEFAULT_Q: u64 = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error(
        "resilience bound n >= 2b + (tau+2)(m+t-1) + e + 1 violated: n = {n}, required {required}"
    )]
    Resilience { n: usize, required: usize },
    #[error("resilience bound n >= b + m + t + e violated: n = {n}, required {required}")]
    LowCostResilience { n: usize, required: usize },
    #[error(
        "wraparound bound p >= 2 n d^tau q^(2 tau + 1) + 1 violated: p = {p}, required {required}"
    )]
    FieldBound { p: u128, required: BigUint },
    #[error("scaled-coefficient range p > 2 N2 violated: p = {p}, required {required}")]
    ScaledRange { p: u128, required: BigUint },
    #[error("ratio recovery bound p >= 2 N1 N2 + 1 violated: p = {p}, required {required}")]
    RatioBound { p: u128, required: BigUint },
    #[error("the low-cost protocol supports m = 1 only, got m = {m}")]
    Packing { m: usize },
    #[error("evaluation points need n + m + t < p: n + m + t = {points}, p = {p}")]
    DomainTooLarge { points: usize, p: u128 },
    #[error("expected tau + 1 = {expected} discriminator coefficients, got {actual}")]
    CoefficientCount { expected: usize, actual: usize },
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error(transparent)]
    Discriminator(#[from] DiscriminatorError),
}

fn one() -> usize {
    1
}
fn default_q() -> u64 {
    DEFAULT_Q
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_tau() -> usize {
    DEFAULT_COEFFS.len() - 1
}
fn default_coeffs() -> Vec<f64> {
    DEFAULT_COEFFS.to_vec()
}
fn default_scale() -> u64 {
    DEFAULT_COEFF_SCALE
}
fn default_modulus() -> PrimeModulus {
    PrimeModulus::new(PrimeModulus::MERSENNE_127).expect("Mersenne prime")
}

/// `n` users, `b` Byzantine, `t` colluding, `e` dropouts, `m` packed
/// partitions, discriminator degree `tau`, `q` quantization levels and
/// model dimension `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    pub n: usize,
    #[serde(default)]
    pub b: usize,
    #[serde(default = "one")]
    pub t: usize,
    #[serde(default)]
    pub e: usize,
    #[serde(default = "one")]
    pub m: usize,
    #[serde(default = "default_tau")]
    pub tau: usize,
    #[serde(default = "default_q")]
    pub q: u64,
    pub d: usize,
    #[serde(default = "default_modulus", rename = "p")]
    pub modulus: PrimeModulus,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_coeffs")]
    pub coeffs: Vec<f64>,
    #[serde(default = "default_scale")]
    pub coeff_scale: u64,
}

impl ProtocolParams {
    /// Defaults for everything except the sizes.
    pub fn new(n: usize, b: usize, t: usize, e: usize, d: usize) -> Self {
        Self {
            n,
            b,
            t,
            e,
            m: 1,
            tau: default_tau(),
            q: DEFAULT_Q,
            d,
            modulus: default_modulus(),
            epsilon: DEFAULT_EPSILON,
            coeffs: default_coeffs(),
            coeff_scale: DEFAULT_COEFF_SCALE,
        }
    }

    pub fn with_q(mut self, q: u64) -> Self {
        self.q = q;
        self
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_modulus(mut self, modulus: PrimeModulus) -> Self {
        self.modulus = modulus;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// Degree `m + t - 1` of a fresh sharing.
    pub fn degree(&self) -> usize {
        self.m + self.t - 1
    }

    pub fn sharing(&self) -> SharingParams {
        SharingParams {
            n: self.n,
            m: self.m,
            t: self.t,
        }
    }

    /// Dimension rounded up to a multiple of `m`.
    pub fn padded_dim(&self) -> usize {
        self.d.div_ceil(self.m) * self.m
    }

    pub fn poly<T: Real>(&self) -> Result<DiscriminatorPoly<T>, ConfigError> {
        Ok(DiscriminatorPoly::new(
            self.coeffs.iter().map(|&c| T::of(c)).collect(),
            self.q,
            self.coeff_scale,
            self.modulus,
        )?)
    }

    /// `2b + (tau+2)(m+t-1) + e + 1`.
    pub fn byitfl_min_users(&self) -> usize {
        2 * self.b + (self.tau + 2) * self.degree() + self.e + 1
    }

    /// `b + m + t + e`.
    pub fn lobyitfl_min_users(&self) -> usize {
        self.b + self.m + self.t + self.e
    }

    /// `(n - e - 1) / (tau + 2) - b - t + 1`, reported for diagnostics only.
    pub fn partition_bound(&self) -> f64 {
        (self.n as f64 - self.e as f64 - 1.0) / (self.tau as f64 + 2.0)
            - self.b as f64
            - self.t as f64
            + 1.0
    }

    /// `(N1, N2)` bounds on `|Sigma_1|` and `|Sigma_2|` entries over `n` users.
    pub fn sigma_bounds(&self) -> Result<(u128, u128), ConfigError> {
        let poly = self.poly::<f64>()?;
        let (n1, n2) = poly.sigma_bounds(self.n, self.padded_dim());
        match (n1.to_u128(), n2.to_u128()) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(ConfigError::ScaledRange {
                p: self.modulus.value(),
                required: BigUint::from(2u32) * n2,
            }),
        }
    }

    /// The largest of the three field-size requirements.
    pub fn required_modulus(&self) -> Result<BigUint, ConfigError> {
        let poly = self.poly::<f64>()?;
        let d = self.padded_dim();
        let (_, n2) = poly.sigma_bounds(self.n, d);
        let scaled = BigUint::from(2u32) * n2 + BigUint::from(1u32);
        let field = p_lower_bound(self.n as u64, d as u64, self.tau as u32, self.q);
        let ratio = poly.ratio_modulus_bound(self.n, d);
        Ok(field.max(scaled).max(ratio))
    }

    /// The smallest prime satisfying every field-size requirement.
    pub fn smallest_modulus(&self) -> Result<PrimeModulus, ConfigError> {
        let need = self.required_modulus()?;
        need.to_u128()
            .and_then(PrimeModulus::next_prime)
            .ok_or(ConfigError::RatioBound {
                p: self.modulus.value(),
                required: need,
            })
    }

    /// Checks shared by both protocols.
    pub fn validate_common(&self) -> Result<(), ConfigError> {
        self.validate_shape()?;
        self.validate_field()
    }

    /// Positivity and coefficient-count checks.
    pub fn validate_shape(&self) -> Result<(), ConfigError> {
        if self.n == 0 || self.d == 0 || self.m == 0 || self.t == 0 {
            return Err(ConfigError::Invalid(
                "n, d, m and t must be positive".into(),
            ));
        }
        if self.tau == 0 {
            return Err(ConfigError::Invalid("tau must be positive".into()));
        }
        if self.coeffs.len() != self.tau + 1 {
            return Err(ConfigError::CoefficientCount {
                expected: self.tau + 1,
                actual: self.coeffs.len(),
            });
        }
        if self.q == 0 {
            return Err(ConfigError::Invalid("q must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Field-size requirements: evaluation points, coefficient range and
    /// ratio recovery.
    pub fn validate_field(&self) -> Result<(), ConfigError> {
        let p = self.modulus.value();
        let points = self.n + self.m + self.t;
        if points as u128 >= p {
            return Err(ConfigError::DomainTooLarge { points, p });
        }
        let d = self.padded_dim();
        let field = p_lower_bound(self.n as u64, d as u64, self.tau as u32, self.q);
        if BigUint::from(p) < field {
            return Err(ConfigError::FieldBound { p, required: field });
        }
        let poly = self.poly::<f64>()?;
        let (_, n2) = poly.sigma_bounds(self.n, d);
        let scaled = BigUint::from(2u32) * n2 + BigUint::from(1u32);
        if BigUint::from(p) < scaled {
            return Err(ConfigError::ScaledRange {
                p,
                required: scaled,
            });
        }
        let ratio = poly.ratio_modulus_bound(self.n, d);
        if BigUint::from(p) < ratio {
            return Err(ConfigError::RatioBound { p, required: ratio });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        let p = ProtocolParams::new(9, 1, 1, 1, 4);
        assert_eq!(p.byitfl_min_users(), 9);
        assert_eq!(p.lobyitfl_min_users(), 4);
        assert!(p.partition_bound() < 1.0);
    }

    #[test]
    fn smallest_modulus_passes_validation() {
        let p = ProtocolParams::new(9, 1, 1, 1, 4).with_q(8);
        let m = p.smallest_modulus().unwrap();
        let checked = p.clone().with_modulus(m);
        checked.validate_common().unwrap();
        let below = PrimeModulus::next_prime(m.value() / 2).unwrap();
        assert!(matches!(
            p.with_modulus(below).validate_common(),
            Err(ConfigError::RatioBound { .. })
        ));
    }

    #[test]
    fn serde_defaults() {
        let p: ProtocolParams = toml::from_str("n = 5\nd = 3").unwrap();
        assert_eq!(p, ProtocolParams::new(5, 0, 1, 0, 3));
        let back: ProtocolParams = toml::from_str(&toml::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }
}
