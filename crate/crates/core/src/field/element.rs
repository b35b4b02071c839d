use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::Rng;

use super::{FieldError, PrimeModulus};

/// An element of `F_p`, always stored as its canonical representative in `[0, p)`.
///
/// The arithmetic operators panic on mixed moduli; [`Fp::arith`] is the checked
/// entry point.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp {
    value: u128,
    modulus: PrimeModulus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Inv,
    Pow,
}

impl Fp {
    /// Reduces `value` modulo `p`.
    pub fn new(value: u128, modulus: PrimeModulus) -> Self {
        Self {
            value: value % modulus.value(),
            modulus,
        }
    }

    pub fn zero(modulus: PrimeModulus) -> Self {
        Self { value: 0, modulus }
    }

    pub fn one(modulus: PrimeModulus) -> Self {
        Self { value: 1, modulus }
    }

    /// Embeds an arbitrary signed integer by reduction (no range check).
    pub fn from_i128(x: i128, modulus: PrimeModulus) -> Self {
        let p = modulus.value();
        let mag = x.unsigned_abs() % p;
        let value = if x < 0 && mag != 0 { p - mag } else { mag };
        Self { value, modulus }
    }

    pub fn random<R: Rng + ?Sized>(modulus: PrimeModulus, rng: &mut R) -> Self {
        Self {
            value: rng.random_range(0..modulus.value()),
            modulus,
        }
    }

    pub fn random_nonzero<R: Rng + ?Sized>(modulus: PrimeModulus, rng: &mut R) -> Self {
        Self {
            value: rng.random_range(1..modulus.value()),
            modulus,
        }
    }

    #[inline]
    pub fn value(&self) -> u128 {
        self.value
    }

    #[inline]
    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn pow(&self, exp: u128) -> Self {
        Self {
            value: self.modulus.pow(self.value, exp),
            modulus: self.modulus,
        }
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(&self) -> Result<Self, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        Ok(self.pow(self.modulus.value() - 2))
    }

    fn check_same(&self, other: &Self) -> Result<(), FieldError> {
        if self.modulus != other.modulus {
            return Err(FieldError::ModulusMismatch {
                left: self.modulus.value(),
                right: other.modulus.value(),
            });
        }
        Ok(())
    }

    /// Checked binary arithmetic. For `Inv` the right operand is ignored; for
    /// `Pow` the right operand's canonical value is the exponent.
    pub fn arith(op: ArithOp, a: Fp, b: Fp) -> Result<Fp, FieldError> {
        if op != ArithOp::Inv {
            a.check_same(&b)?;
        }
        match op {
            ArithOp::Add => Ok(a + b),
            ArithOp::Sub => Ok(a - b),
            ArithOp::Mul => Ok(a * b),
            ArithOp::Div => Ok(a * b.inv()?),
            ArithOp::Inv => a.inv(),
            ArithOp::Pow => Ok(a.pow(b.value)),
        }
    }

    #[inline]
    fn assert_same(&self, other: &Self) {
        assert!(
            self.modulus == other.modulus,
            "mixed moduli: {} vs {}",
            self.modulus,
            other.modulus
        );
    }
}

impl fmt::Debug for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Add for Fp {
    type Output = Fp;
    #[inline]
    fn add(self, rhs: Fp) -> Fp {
        self.assert_same(&rhs);
        Fp {
            value: self.modulus.add(self.value, rhs.value),
            modulus: self.modulus,
        }
    }
}

impl Sub for Fp {
    type Output = Fp;
    #[inline]
    fn sub(self, rhs: Fp) -> Fp {
        self.assert_same(&rhs);
        Fp {
            value: self.modulus.sub(self.value, rhs.value),
            modulus: self.modulus,
        }
    }
}

impl Mul for Fp {
    type Output = Fp;
    #[inline]
    fn mul(self, rhs: Fp) -> Fp {
        self.assert_same(&rhs);
        Fp {
            value: self.modulus.mul(self.value, rhs.value),
            modulus: self.modulus,
        }
    }
}

impl Div for Fp {
    type Output = Fp;
    /// Panics on a zero divisor.
    fn div(self, rhs: Fp) -> Fp {
        self * rhs.inv().expect("division by zero in F_p")
    }
}

impl Neg for Fp {
    type Output = Fp;
    fn neg(self) -> Fp {
        Fp {
            value: self.modulus.sub(0, self.value),
            modulus: self.modulus,
        }
    }
}

impl AddAssign for Fp {
    fn add_assign(&mut self, rhs: Fp) {
        *self = *self + rhs;
    }
}

impl SubAssign for Fp {
    fn sub_assign(&mut self, rhs: Fp) {
        *self = *self - rhs;
    }
}

impl MulAssign for Fp {
    fn mul_assign(&mut self, rhs: Fp) {
        *self = *self * rhs;
    }
}

/// Sum of a non-empty iterator; panics on an empty one since the modulus is unknown.
impl Sum for Fp {
    fn sum<I: Iterator<Item = Fp>>(mut iter: I) -> Fp {
        let first = iter.next().expect("sum of empty F_p iterator");
        iter.fold(first, |acc, x| acc + x)
    }
}
