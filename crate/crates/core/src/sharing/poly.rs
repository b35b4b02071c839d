use crate::field::{Fp, PrimeModulus};

use super::SharingError;

/// Dense univariate polynomial over `F_p`, lowest coefficient first, with no
/// trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    modulus: PrimeModulus,
    coeffs: Vec<Fp>,
}

impl Poly {
    pub fn new(modulus: PrimeModulus, mut coeffs: Vec<Fp>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { modulus, coeffs }
    }

    pub fn zero(modulus: PrimeModulus) -> Self {
        Self::new(modulus, Vec::new())
    }

    pub fn constant(c: Fp) -> Self {
        Self::new(c.modulus(), vec![c])
    }

    pub fn random<R: rand::Rng + ?Sized>(
        modulus: PrimeModulus,
        degree: usize,
        rng: &mut R,
    ) -> Self {
        Self::new(
            modulus,
            (0..=degree).map(|_| Fp::random(modulus, rng)).collect(),
        )
    }

    /// `prod (x - r)` over the given roots.
    pub fn from_roots(modulus: PrimeModulus, roots: &[Fp]) -> Self {
        let mut p = Self::constant(Fp::one(modulus));
        for &r in roots {
            p = p.mul(&Self::new(modulus, vec![-r, Fp::one(modulus)]));
        }
        p
    }

    pub fn coeffs(&self) -> &[Fp] {
        &self.coeffs
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: Fp) -> Fp {
        self.coeffs
            .iter()
            .rev()
            .fold(Fp::zero(self.modulus), |acc, &c| acc * x + c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = Fp::zero(self.modulus);
        let coeffs = (0..len)
            .map(|i| *self.coeffs.get(i).unwrap_or(&zero) + *other.coeffs.get(i).unwrap_or(&zero))
            .collect();
        Self::new(self.modulus, coeffs)
    }

    pub fn scale(&self, c: Fp) -> Self {
        Self::new(self.modulus, self.coeffs.iter().map(|&a| a * c).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.modulus);
        }
        let mut out = vec![Fp::zero(self.modulus); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(self.modulus, out)
    }

    /// Quotient and remainder; `None` when dividing by zero.
    pub fn div_rem(&self, divisor: &Self) -> Option<(Self, Self)> {
        let dd = divisor.degree()?;
        let lead_inv = divisor.coeffs[dd].inv().ok()?;
        let mut rem = self.coeffs.clone();
        let n = rem.len();
        if n <= dd {
            return Some((Self::zero(self.modulus), self.clone()));
        }
        let mut quot = vec![Fp::zero(self.modulus); n - dd];
        for k in (0..n - dd).rev() {
            let c = rem[k + dd] * lead_inv;
            quot[k] = c;
            if c.is_zero() {
                continue;
            }
            for (j, &b) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= c * b;
            }
        }
        rem.truncate(dd);
        Some((Self::new(self.modulus, quot), Self::new(self.modulus, rem)))
    }

    /// Lagrange interpolation through `(x_i, y_i)`.
    pub fn interpolate(xs: &[Fp], ys: &[Fp]) -> Result<Self, SharingError> {
        if xs.len() != ys.len() {
            return Err(SharingError::LengthMismatch {
                expected: xs.len(),
                actual: ys.len(),
            });
        }
        let Some(&first) = xs.first() else {
            return Err(SharingError::Threshold {
                needed: 1,
                available: 0,
            });
        };
        let modulus = first.modulus();
        super::domain::ensure_distinct(xs)?;
        let mut acc = Self::zero(modulus);
        for (j, (&xj, &yj)) in xs.iter().zip(ys).enumerate() {
            let others: Vec<Fp> = xs
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, &x)| x)
                .collect();
            let basis = Self::from_roots(modulus, &others);
            let denom = basis.eval(xj);
            acc = acc.add(&basis.scale(yj * denom.inv()?));
        }
        Ok(acc)
    }
}
