//! The discriminator polynomial `h`, trust scores, plaintext aggregation
//! oracles (real and exact-integer) and the sign-corrected final update.

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::field::{centered_lift, FieldError, FieldVector, Fp, PrimeModulus};
use crate::quantize::{
    dequantize_rational, NormalizedUpdate, QuantizeError, QuantizedUpdate, RealUpdate,
};
use crate::sharing::horner;
use crate::Real;

/// `h(x) = 0.46897526 x^3 + 0.56578977 x^2 + 0.1860353 x + 0.01363545`,
/// lowest coefficient first.
pub const DEFAULT_COEFFS: [f64; 4] = [0.01363545, 0.1860353, 0.56578977, 0.46897526];

/// Integer factor applied to every fixed-point coefficient.
pub const DEFAULT_COEFF_SCALE: u64 = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscriminatorError {
    #[error("discriminator needs at least one coefficient")]
    NoCoefficients,
    #[error("coefficient {index} is not finite")]
    NonFinite { index: usize },
    #[error("fixed-point coefficient {index} does not fit in 126 bits")]
    CoefficientOverflow { index: usize },
    #[error("coefficient scale must be positive")]
    ZeroScale,
    #[error("sum of trust scores is zero")]
    Degenerate,
    #[error("expected dimension {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("exact aggregate exceeds 127 bits")]
    Overflow,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
}

/// `h` with real coefficients and its fixed-point field image
/// `H(X) = sum_k round(h_k S q^(2(tau-k))) X^k`, so that
/// `lift(H(X)) / (S q^(2 tau)) ~ h(X / q^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorPoly<T> {
    real_coeffs: Vec<T>,
    int_coeffs: Vec<i128>,
    field_coeffs: Vec<Fp>,
    q: u64,
    scale: u64,
}

impl<T: Real> DiscriminatorPoly<T> {
    pub fn new(
        real_coeffs: Vec<T>,
        q: u64,
        scale: u64,
        modulus: PrimeModulus,
    ) -> Result<Self, DiscriminatorError> {
        if real_coeffs.is_empty() {
            return Err(DiscriminatorError::NoCoefficients);
        }
        if scale == 0 {
            return Err(DiscriminatorError::ZeroScale);
        }
        if let Some(index) = real_coeffs.iter().position(|c| !c.is_finite()) {
            return Err(DiscriminatorError::NonFinite { index });
        }
        let tau = real_coeffs.len() - 1;
        let mut int_coeffs = Vec::with_capacity(real_coeffs.len());
        for (k, c) in real_coeffs.iter().enumerate() {
            let factor = scale as f64 * (q as f64).powi(2 * (tau - k) as i32);
            let v = (c.as_f64() * factor).round();
            if v.is_nan() || v.abs() >= 2f64.powi(126) {
                return Err(DiscriminatorError::CoefficientOverflow { index: k });
            }
            int_coeffs.push(v as i128);
        }
        let field_coeffs = int_coeffs
            .iter()
            .map(|&c| crate::field::phi(c, modulus))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            real_coeffs,
            int_coeffs,
            field_coeffs,
            q,
            scale,
        })
    }

    pub fn standard(q: u64, modulus: PrimeModulus) -> Result<Self, DiscriminatorError> {
        Self::new(
            DEFAULT_COEFFS.iter().map(|&c| T::of(c)).collect(),
            q,
            DEFAULT_COEFF_SCALE,
            modulus,
        )
    }

    pub fn tau(&self) -> usize {
        self.real_coeffs.len() - 1
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn real_coeffs(&self) -> &[T] {
        &self.real_coeffs
    }

    pub fn int_coeffs(&self) -> &[i128] {
        &self.int_coeffs
    }

    pub fn field_coeffs(&self) -> &[Fp] {
        &self.field_coeffs
    }

    pub fn h_real(&self, x: T) -> T {
        self.real_coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, &c| acc * x + c)
    }

    pub fn h_int(&self, x: &BigInt) -> BigInt {
        self.int_coeffs
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, &c| acc * x + BigInt::from(c))
    }

    pub fn h_field(&self, x: Fp) -> Fp {
        horner(&self.field_coeffs, x)
    }

    /// `S q^(2 tau)`, the common scale of all terms of `H`.
    pub fn output_scale(&self) -> f64 {
        self.scale as f64 * (self.q as f64).powi(2 * self.tau() as i32)
    }

    /// Worst-case `|lift(H(X)) / (S q^(2 tau)) - h(X / q^2)|` over `|X| <= d q^2`.
    pub fn rounding_error_bound(&self, d: usize) -> f64 {
        let tau = self.tau();
        let reach = d as f64 * (self.q as f64).powi(2);
        (0..=tau)
            .map(|k| {
                let exact = self.real_coeffs[k].as_f64()
                    * self.scale as f64
                    * (self.q as f64).powi(2 * (tau - k) as i32);
                (exact - self.int_coeffs[k] as f64).abs() * reach.powi(k as i32)
            })
            .sum::<f64>()
            / self.output_scale()
    }

    /// Bounds `(N1, N2)` on `|Sigma_1|` and on each `|Sigma_2|` entry for `n`
    /// honest users of dimension `d`.
    pub fn sigma_bounds(&self, n: usize, d: usize) -> (BigUint, BigUint) {
        let reach = BigUint::from(d as u64) * BigUint::from(self.q).pow(2);
        let per_user: BigUint = self
            .int_coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| BigUint::from(c.unsigned_abs()) * reach.pow(k as u32))
            .sum();
        let n1 = per_user * BigUint::from(n as u64);
        let n2 = &n1 * BigUint::from(self.q);
        (n1, n2)
    }

    /// Smallest modulus for which `Sigma_2 / Sigma_1` is recoverable from its
    /// field image: `2 N1 N2 + 1`.
    pub fn ratio_modulus_bound(&self, n: usize, d: usize) -> BigUint {
        let (n1, n2) = self.sigma_bounds(n, d);
        BigUint::from(2u32) * n1 * n2 + BigUint::from(1u32)
    }
}

/// [`DEFAULT_COEFFS`] evaluated by Horner's rule.
pub fn h_real<T: Real>(x: T) -> T {
    DEFAULT_COEFFS
        .iter()
        .rev()
        .fold(T::zero(), |acc, &c| acc * x + T::of(c))
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrustScores<T> {
    pub real: Vec<T>,
    pub field: Vec<Fp>,
}

impl<T: Real> TrustScores<T> {
    pub fn compute(
        poly: &DiscriminatorPoly<T>,
        u0: &NormalizedUpdate<T>,
        users: &[NormalizedUpdate<T>],
        u0q: &QuantizedUpdate,
        usersq: &[QuantizedUpdate],
    ) -> Self {
        Self {
            real: users
                .iter()
                .map(|u| poly.h_real(dot(u0.values(), u.values())))
                .collect(),
            field: usersq
                .iter()
                .map(|u| poly.h_field(u0q.values.dot(&u.values)))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Finalized<T> {
    pub update: Vec<T>,
    /// Set when `nu` is zero and the update was replaced by zeros.
    pub degenerate: bool,
}

/// `+-||u_0|| nu / ||nu||`, flipping when `<nu, u_0> < 0`.
pub fn finalize_update<T: Real>(nu: &[T], u0: &RealUpdate<T>) -> Finalized<T> {
    let norm_nu = dot(nu, nu).sqrt();
    if norm_nu == T::zero() || !norm_nu.is_finite() {
        return Finalized {
            update: vec![T::zero(); nu.len()],
            degenerate: true,
        };
    }
    let sign = if dot(nu, u0.values()) >= T::zero() {
        T::one()
    } else {
        -T::one()
    };
    let factor = sign * u0.norm() / norm_nu;
    Finalized {
        update: nu.iter().map(|&v| v * factor).collect(),
        degenerate: false,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateResult<T> {
    pub sigma1: T,
    pub sigma2: Vec<T>,
    pub nu: Vec<T>,
    pub final_update: Vec<T>,
    pub degenerate: bool,
}

/// Aggregation with real trust scores; `u0` supplies both the reference
/// direction and the output magnitude.
pub fn plaintext_aggregate_real<T: Real>(
    poly: &DiscriminatorPoly<T>,
    u0: &NormalizedUpdate<T>,
    users: &[NormalizedUpdate<T>],
) -> Result<AggregateResult<T>, DiscriminatorError> {
    let d = u0.values().len();
    let mut sigma1 = T::zero();
    let mut sigma2 = vec![T::zero(); d];
    for u in users {
        if u.values().len() != d {
            return Err(DiscriminatorError::DimensionMismatch {
                expected: d,
                actual: u.values().len(),
            });
        }
        let ts = poly.h_real(dot(u0.values(), u.values()));
        sigma1 = sigma1 + ts;
        for (s, &x) in sigma2.iter_mut().zip(u.values()) {
            *s = *s + ts * x;
        }
    }
    if sigma1 == T::zero() {
        return Err(DiscriminatorError::Degenerate);
    }
    let nu: Vec<T> = sigma2.iter().map(|&s| s / sigma1).collect();
    let raw_u0 = RealUpdate::new(
        u0.values()
            .iter()
            .map(|&x| x * u0.original_norm())
            .collect(),
    )
    .map_err(DiscriminatorError::Quantize)?;
    let fin = finalize_update(&nu, &raw_u0);
    Ok(AggregateResult {
        sigma1,
        sigma2,
        nu,
        final_update: fin.update,
        degenerate: fin.degenerate,
    })
}

/// Unbounded-integer mirror of the in-field aggregation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactAggregate {
    pub x: Vec<BigInt>,
    pub h: Vec<BigInt>,
    pub sigma1: BigInt,
    pub sigma2: Vec<BigInt>,
}

impl ExactAggregate {
    pub fn reduce(&self, modulus: PrimeModulus) -> (Fp, FieldVector) {
        let s1 = big_to_fp(&self.sigma1, modulus);
        let s2 = self.sigma2.iter().map(|v| big_to_fp(v, modulus)).collect();
        (s1, FieldVector::new(modulus, s2).expect("one modulus"))
    }

    /// `(Sigma_2 / Sigma_1) / q` entry-wise through exact rationals.
    pub fn nu<T: Real>(&self, q: u64) -> Result<Vec<T>, DiscriminatorError> {
        let den = self.sigma1.to_i128().ok_or(DiscriminatorError::Overflow)?;
        if den == 0 {
            return Err(DiscriminatorError::Degenerate);
        }
        self.sigma2
            .iter()
            .map(|v| {
                let num = v.to_i128().ok_or(DiscriminatorError::Overflow)?;
                Ok(dequantize_rational(num, den, q)?)
            })
            .collect()
    }

    /// Largest magnitude among all sums, for wraparound checks.
    pub fn max_magnitude(&self) -> BigInt {
        self.sigma2
            .iter()
            .chain(std::iter::once(&self.sigma1))
            .map(|v| v.abs())
            .max()
            .unwrap_or_default()
    }
}

pub(crate) fn big_to_fp(v: &BigInt, modulus: PrimeModulus) -> Fp {
    let p = BigInt::from(modulus.value());
    let r = ((v % &p) + &p) % &p;
    Fp::new(r.to_u128().expect("reduced below p"), modulus)
}

/// `X_i = <lift(u_0), lift(u_i)>`, `Sigma_1 = sum H(X_i)`,
/// `Sigma_2 = sum H(X_i) lift(u_i)` over the integers.
pub fn plaintext_aggregate_exact<T: Real>(
    poly: &DiscriminatorPoly<T>,
    u0q: &QuantizedUpdate,
    usersq: &[QuantizedUpdate],
) -> Result<ExactAggregate, DiscriminatorError> {
    let base: Vec<BigInt> = u0q.lifts().into_iter().map(BigInt::from).collect();
    let d = base.len();
    let mut out = ExactAggregate {
        x: Vec::with_capacity(usersq.len()),
        h: Vec::with_capacity(usersq.len()),
        sigma1: BigInt::zero(),
        sigma2: vec![BigInt::zero(); d],
    };
    for u in usersq {
        if u.len() != d {
            return Err(DiscriminatorError::DimensionMismatch {
                expected: d,
                actual: u.len(),
            });
        }
        let lifts: Vec<BigInt> = u.lifts().into_iter().map(BigInt::from).collect();
        let x: BigInt = base.iter().zip(&lifts).map(|(a, b)| a * b).sum();
        let h = poly.h_int(&x);
        for (s, l) in out.sigma2.iter_mut().zip(&lifts) {
            *s += &h * l;
        }
        out.sigma1 += &h;
        out.x.push(x);
        out.h.push(h);
    }
    Ok(out)
}

/// The same sums computed directly in `F_p`.
pub fn field_aggregate<T: Real>(
    poly: &DiscriminatorPoly<T>,
    u0q: &QuantizedUpdate,
    usersq: &[QuantizedUpdate],
) -> (Fp, FieldVector) {
    let modulus = u0q.values.modulus();
    let mut s1 = Fp::zero(modulus);
    let mut s2 = FieldVector::zeros(modulus, u0q.len());
    for u in usersq {
        let h = poly.h_field(u0q.values.dot(&u.values));
        s1 += h;
        s2.add_assign(&u.values.scale(h));
    }
    (s1, s2)
}

/// Centered lifts of a field pair, for diagnostics.
pub fn lift_pair(s1: Fp, s2: &FieldVector) -> (i128, Vec<i128>) {
    (
        centered_lift(s1),
        s2.iter().map(|&e| centered_lift(e)).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m61() -> PrimeModulus {
        PrimeModulus::new(PrimeModulus::MERSENNE_61).unwrap()
    }

    #[test]
    fn default_polynomial_values() {
        assert_eq!(h_real(0.0f64), 0.01363545);
        assert!((h_real(1.0f64) - 1.23443578).abs() < 1e-8);
        assert!((h_real(-1.0f64) + 0.07558534).abs() < 1e-8);
        assert!((h_real(1.0f32) - 1.234_435_8).abs() < 1e-6);
    }

    #[test]
    fn fixed_point_coefficients() {
        let p: DiscriminatorPoly<f64> =
            DiscriminatorPoly::new(DEFAULT_COEFFS.to_vec(), 1, 1, m61()).unwrap();
        assert_eq!(p.int_coeffs(), &[0, 0, 1, 0]);
        let p: DiscriminatorPoly<f64> = DiscriminatorPoly::standard(8, m61()).unwrap();
        let q6 = 8f64.powi(6);
        assert_eq!(
            p.int_coeffs()[0],
            (0.01363545 * 1024.0 * q6).round() as i128
        );
        assert_eq!(centered_lift(p.h_field(Fp::zero(m61()))), p.int_coeffs()[0]);
    }

    #[test]
    fn aligned_input_maps_to_h_of_one() {
        let q = 8u64;
        let p: DiscriminatorPoly<f64> = DiscriminatorPoly::standard(q, m61()).unwrap();
        let x = Fp::new((q * q) as u128, m61());
        let v = centered_lift(p.h_field(x)) as f64 / p.output_scale();
        let tol = 4.0 * 0.5 * (1.0 + 64.0 + 4096.0 + 262144.0) / (1024.0 * 262144.0);
        assert!((v - 1.23443578).abs() <= tol);
        assert!(v < 1.24);
    }

    #[test]
    fn finalize_examples() {
        let u0 = RealUpdate::new(vec![3.0f64, 4.0]).unwrap();
        let f = finalize_update(&[-3.0, -4.0], &u0);
        assert_eq!(f.update, vec![3.0, 4.0]);
        assert_eq!(finalize_update(&[6.0, 8.0], &u0).update, vec![3.0, 4.0]);
        let perp = finalize_update(&[-4.0, 3.0], &u0);
        assert_eq!(perp.update, vec![-4.0, 3.0]);
        let z = finalize_update(&[0.0, 0.0], &u0);
        assert!(z.degenerate);
        assert_eq!(z.update, vec![0.0, 0.0]);
    }
}
