//! Normalization, the unbiased stochastic quantizer `Q_q`, embedding of
//! quantized updates into `F_p`, and de-quantization of field ratios.

use num_integer::Integer;
use rand::Rng;
use thiserror::Error;

use crate::field::{centered_lift, phi, FieldError, FieldVector, Fp, PrimeModulus};
use crate::Real;

pub const DEFAULT_LEVELS: u64 = 1024;
pub const DEFAULT_NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantizeError {
    #[error("update entry {index} is not finite")]
    NonFinite { index: usize },
    #[error("update norm {norm:e} is below the floor {floor:e}")]
    Degenerate { norm: f64, floor: f64 },
    #[error("quantizer input {x} lies outside [-1, 1]")]
    OutOfRange { x: f64 },
    #[error("quantization levels must be at least 1")]
    ZeroLevels,
    #[error("de-quantization with a zero denominator")]
    ZeroDenominator,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A raw model update with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct RealUpdate<T> {
    values: Vec<T>,
}

impl<T: Real> RealUpdate<T> {
    pub fn new(values: Vec<T>) -> Result<Self, QuantizeError> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(QuantizeError::NonFinite { index });
        }
        Ok(Self { values })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![T::zero(); len],
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> T {
        norm(&self.values)
    }
}

/// A unit-norm update together with the norm it was divided by.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedUpdate<T> {
    values: Vec<T>,
    original_norm: T,
}

impl<T: Real> NormalizedUpdate<T> {
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn original_norm(&self) -> T {
        self.original_norm
    }

    /// Wraps a vector that is already scaled as the caller wants; used by
    /// adversaries that skip normalization.
    pub fn from_raw(values: Vec<T>) -> Self {
        let original_norm = norm(&values);
        Self {
            values,
            original_norm,
        }
    }
}

/// Quantized update in `F_p^d`; honest entries lift into `[-q, q]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedUpdate {
    pub values: FieldVector,
    pub q: u64,
}

impl QuantizedUpdate {
    pub fn lifts(&self) -> Vec<i128> {
        self.values.iter().map(|&e| centered_lift(e)).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub(crate) fn norm<T: Real>(xs: &[T]) -> T {
    xs.iter().map(|&x| x * x).sum::<T>().sqrt()
}

pub fn normalize<T: Real>(
    u: &RealUpdate<T>,
    floor: T,
) -> Result<NormalizedUpdate<T>, QuantizeError> {
    let n = u.norm();
    if n.is_nan() || n < floor || n == T::zero() {
        return Err(QuantizeError::Degenerate {
            norm: n.as_f64(),
            floor: floor.as_f64(),
        });
    }
    Ok(NormalizedUpdate {
        values: u.values.iter().map(|&x| x / n).collect(),
        original_norm: n,
    })
}

/// Integer level `k` with `Q_q(x) = k / q`: `floor(qx)` with probability
/// `1 - frac(qx)`, otherwise `floor(qx) + 1`.
pub fn stochastic_level<T: Real, R: Rng + ?Sized>(
    x: T,
    q: u64,
    rng: &mut R,
) -> Result<i64, QuantizeError> {
    if q == 0 {
        return Err(QuantizeError::ZeroLevels);
    }
    if x.is_nan() || x.abs() > T::one() {
        return Err(QuantizeError::OutOfRange { x: x.as_f64() });
    }
    Ok(level_unchecked(x, q, rng))
}

pub(crate) fn level_unchecked<T: Real, R: Rng + ?Sized>(x: T, q: u64, rng: &mut R) -> i64 {
    let scaled = x.as_f64() * q as f64;
    let floor = scaled.floor();
    let frac = scaled - floor;
    let base = floor as i64;
    // Always draw so that the random stream does not depend on the data.
    let u: f64 = rng.random();
    if u < frac {
        base + 1
    } else {
        base
    }
}

pub fn stochastic_quantize<T: Real, R: Rng + ?Sized>(
    x: T,
    q: u64,
    rng: &mut R,
) -> Result<T, QuantizeError> {
    let k = stochastic_level(x, q, rng)?;
    Ok(T::of(k as f64 / q as f64))
}

/// Entry-wise `phi(q * Q_q(x))`.
///
/// Entries within `1e-9` of the unit interval are clamped first; normalization
/// can overshoot 1 by a rounding step on one-hot vectors.
pub fn embed<T: Real, R: Rng + ?Sized>(
    nu: &NormalizedUpdate<T>,
    q: u64,
    modulus: PrimeModulus,
    rng: &mut R,
) -> Result<QuantizedUpdate, QuantizeError> {
    let slack = T::of(1e-9);
    let mut out = Vec::with_capacity(nu.values.len());
    for &x in &nu.values {
        let x = if x.abs() <= T::one() + slack {
            x.max(-T::one()).min(T::one())
        } else {
            x
        };
        let k = stochastic_level(x, q, rng)?;
        out.push(phi(k as i128, modulus)?);
    }
    Ok(QuantizedUpdate {
        values: FieldVector::new(modulus, out)?,
        q,
    })
}

/// Like [`embed`] but without the unit-interval check, so levels may exceed `q`.
pub fn embed_unchecked<T: Real, R: Rng + ?Sized>(
    values: &[T],
    q: u64,
    modulus: PrimeModulus,
    rng: &mut R,
) -> Result<QuantizedUpdate, QuantizeError> {
    let out = values
        .iter()
        .map(|&x| phi(level_unchecked(x, q, rng) as i128, modulus))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(QuantizedUpdate {
        values: FieldVector::new(modulus, out)?,
        q,
    })
}

/// `(num / den) / q` for exact integers, reduced to lowest terms before the
/// floating-point division so equal rationals always give equal results.
pub fn dequantize_rational<T: Real>(num: i128, den: i128, q: u64) -> Result<T, QuantizeError> {
    if den == 0 {
        return Err(QuantizeError::ZeroDenominator);
    }
    let g = num.gcd(&den);
    let (mut a, mut b) = if g == 0 { (0, 1) } else { (num / g, den / g) };
    if b < 0 {
        a = -a;
        b = -b;
    }
    Ok(T::of(a as f64 / b as f64 / q as f64))
}

/// De-quantizes `num / den` through centered lifts, entry-wise over `num`.
pub fn dequantize_ratio<T: Real>(num: &[Fp], den: Fp, q: u64) -> Result<Vec<T>, QuantizeError> {
    let d = centered_lift(den);
    num.iter()
        .map(|&x| dequantize_rational(centered_lift(x), d, q))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(7)
    }

    #[test]
    fn normalize_examples() {
        let n = normalize(&RealUpdate::new(vec![3.0f64, 4.0]).unwrap(), 1e-12).unwrap();
        assert_eq!(n.values(), &[0.6, 0.8]);
        assert_eq!(n.original_norm(), 5.0);
        let n = normalize(&RealUpdate::new(vec![0.0f64, -2.0]).unwrap(), 1e-12).unwrap();
        assert_eq!(n.values(), &[0.0, -1.0]);
        assert_eq!(n.original_norm(), 2.0);
        let err = normalize(&RealUpdate::new(vec![1e-30f64, 0.0]).unwrap(), 1e-12);
        assert!(matches!(err, Err(QuantizeError::Degenerate { .. })));
        assert!(RealUpdate::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn normalize_f32() {
        let n = normalize(&RealUpdate::new(vec![3.0f32, 4.0]).unwrap(), 1e-12).unwrap();
        let s: f32 = n.values().iter().map(|x| x * x).sum();
        assert!((s - 1.0).abs() < 1e-6);
    }

    #[test]
    fn quantizer_deterministic_cases() {
        let mut r = rng();
        for _ in 0..100 {
            assert_eq!(stochastic_quantize(0.25f64, 4, &mut r).unwrap(), 0.25);
            assert_eq!(stochastic_quantize(-1.0f64, 8, &mut r).unwrap(), -1.0);
            assert_eq!(stochastic_quantize(1.0f64, 8, &mut r).unwrap(), 1.0);
        }
        assert!(matches!(
            stochastic_quantize(1.5f64, 4, &mut r),
            Err(QuantizeError::OutOfRange { .. })
        ));
        assert_eq!(
            stochastic_level(0.3f64, 0, &mut r),
            Err(QuantizeError::ZeroLevels)
        );
    }

    #[test]
    fn quantizer_two_point_distribution() {
        // x = 0.3, q = 2: 0 w.p. 0.4, 0.5 w.p. 0.6, mean 0.3; sd of one draw = 0.5*sqrt(0.24)
        let mut r = rng();
        let draws = 100_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            let v = stochastic_quantize(0.3f64, 2, &mut r).unwrap();
            assert!(v == 0.0 || v == 0.5);
            sum += v;
        }
        let mean = sum / draws as f64;
        let sd = 0.5 * 0.24f64.sqrt() / (draws as f64).sqrt();
        assert!((mean - 0.3).abs() <= 0.005);
        assert!((mean - 0.3).abs() <= 3.0 * sd);
    }

    #[test]
    fn quantizer_support() {
        let mut r = rng();
        for i in 0..2000 {
            let x = -1.0 + 2.0 * (i as f64) / 1999.0;
            for q in [1u64, 3, 16, 1024] {
                let k = stochastic_level(x, q, &mut r).unwrap();
                let f = (q as f64 * x).floor() as i64;
                assert!(k == f || k == f + 1);
            }
        }
    }

    #[test]
    fn embed_examples() {
        let m = PrimeModulus::new(1009).unwrap();
        let mut r = rng();
        let nu = NormalizedUpdate::from_raw(vec![-0.75f64, 1.0]);
        let e = embed(&nu, 4, m, &mut r).unwrap();
        assert_eq!(e.values[0].value(), 1006);
        assert_eq!(e.values[1].value(), 4);
        let nu = NormalizedUpdate::from_raw(vec![0.6f64, 0.8]);
        for _ in 0..50 {
            let e = embed(&nu, 10, m, &mut r).unwrap();
            assert_eq!(e.lifts(), vec![6, 8]);
        }
    }

    #[test]
    fn embed_respects_level_bound() {
        let m = PrimeModulus::new(PrimeModulus::MERSENNE_61).unwrap();
        let mut r = rng();
        let u =
            RealUpdate::new((0..37).map(|i| ((i * 7919) % 101) as f64 - 50.0).collect()).unwrap();
        let nu = normalize(&u, 1e-12).unwrap();
        for q in [1u64, 8, 1024] {
            let e = embed(&nu, q, m, &mut r).unwrap();
            assert!(e.lifts().iter().all(|l| l.unsigned_abs() <= q as u128));
        }
    }

    #[test]
    fn dequantize_examples() {
        let m = PrimeModulus::new(1009).unwrap();
        let v: Vec<f64> = dequantize_ratio(&[Fp::new(500, m)], Fp::new(100, m), 5).unwrap();
        assert_eq!(v, vec![1.0]);
        let v: Vec<f64> = dequantize_ratio(&[Fp::zero(m)], Fp::new(7, m), 3).unwrap();
        assert_eq!(v, vec![0.0]);
        let z: Result<Vec<f64>, _> = dequantize_ratio(&[Fp::new(1, m)], Fp::zero(m), 3);
        assert_eq!(z, Err(QuantizeError::ZeroDenominator));
        // negative denominators normalize the sign
        assert_eq!(dequantize_rational::<f64>(6, -4, 1).unwrap(), -1.5);
        assert_eq!(
            dequantize_rational::<f64>(3, 2, 1).unwrap(),
            dequantize_rational::<f64>(303, 202, 1).unwrap()
        );
    }
}
