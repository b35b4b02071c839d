use std::ops::Deref;

use rand::Rng;

use super::{FieldError, Fp, PrimeModulus};

/// A vector over `F_p` whose entries all share one modulus.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FieldVector {
    modulus: PrimeModulus,
    elements: Vec<Fp>,
}

impl FieldVector {
    pub fn new(modulus: PrimeModulus, elements: Vec<Fp>) -> Result<Self, FieldError> {
        if let Some(bad) = elements.iter().find(|e| e.modulus() != modulus) {
            return Err(FieldError::ModulusMismatch {
                left: modulus.value(),
                right: bad.modulus().value(),
            });
        }
        Ok(Self { modulus, elements })
    }

    pub fn zeros(modulus: PrimeModulus, len: usize) -> Self {
        Self {
            modulus,
            elements: vec![Fp::zero(modulus); len],
        }
    }

    pub fn random<R: Rng + ?Sized>(modulus: PrimeModulus, len: usize, rng: &mut R) -> Self {
        Self {
            modulus,
            elements: (0..len).map(|_| Fp::random(modulus, rng)).collect(),
        }
    }

    pub fn from_i128s(modulus: PrimeModulus, xs: &[i128]) -> Self {
        Self {
            modulus,
            elements: xs.iter().map(|&x| Fp::from_i128(x, modulus)).collect(),
        }
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn as_slice(&self) -> &[Fp] {
        &self.elements
    }

    pub fn into_vec(self) -> Vec<Fp> {
        self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    fn check_len(&self, other: &Self) {
        assert_eq!(self.len(), other.len(), "vector length mismatch");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_len(other);
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_len(other);
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, c: Fp) -> Self {
        Self {
            modulus: self.modulus,
            elements: self.elements.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn hadamard(&self, other: &Self) -> Self {
        self.check_len(other);
        self.zip_map(other, |a, b| a * b)
    }

    pub fn dot(&self, other: &Self) -> Fp {
        self.check_len(other);
        self.elements
            .iter()
            .zip(&other.elements)
            .fold(Fp::zero(self.modulus), |acc, (&a, &b)| acc + a * b)
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.check_len(other);
        for (a, &b) in self.elements.iter_mut().zip(&other.elements) {
            *a += b;
        }
    }

    /// Appends zeros until the length is a multiple of `m`.
    pub fn zero_padded(&self, m: usize) -> Self {
        let mut elements = self.elements.clone();
        let target = self.len().div_ceil(m) * m;
        elements.resize(target, Fp::zero(self.modulus));
        Self {
            modulus: self.modulus,
            elements,
        }
    }

    /// Splits into `m` consecutive sub-vectors of equal length.
    pub fn partition(&self, m: usize) -> Result<Vec<FieldVector>, FieldError> {
        if m == 0 || !self.len().is_multiple_of(m) {
            return Err(FieldError::Indivisible {
                len: self.len(),
                parts: m,
            });
        }
        let chunk = self.len() / m;
        if chunk == 0 {
            return Ok(vec![Self::zeros(self.modulus, 0); m]);
        }
        Ok(self
            .elements
            .chunks(chunk)
            .map(|c| Self {
                modulus: self.modulus,
                elements: c.to_vec(),
            })
            .collect())
    }

    fn zip_map(&self, other: &Self, f: impl Fn(Fp, Fp) -> Fp) -> Self {
        Self {
            modulus: self.modulus,
            elements: self
                .elements
                .iter()
                .zip(&other.elements)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

impl Deref for FieldVector {
    type Target = [Fp];
    fn deref(&self) -> &[Fp] {
        &self.elements
    }
}
