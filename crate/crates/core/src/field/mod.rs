//! Prime-field arithmetic, the integer embedding `x -> x mod p` with its
//! centered inverse, and the no-wraparound parameter bound.

mod element;
mod modulus;
mod vector;

use num_bigint::BigUint;
use thiserror::Error;

pub use element::{ArithOp, Fp};
pub use modulus::PrimeModulus;
pub use vector::FieldVector;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} is below 3")]
    ModulusTooSmall(u128),
    #[error("modulus {0} is not prime")]
    NotPrime(u128),
    #[error("cannot parse modulus literal {0:?}")]
    BadModulusLiteral(String),
    #[error("operands live in different fields (p = {left} vs p = {right})")]
    ModulusMismatch { left: u128, right: u128 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer {value} exceeds the centered range +/-{half}")]
    EncodingOverflow { value: i128, half: u128 },
    #[error("length {len} is not divisible into {parts} parts")]
    Indivisible { len: usize, parts: usize },
}

/// Wraparound bound `p >= 2 n d^tau q^(2 tau + 1) + 1`, evaluated exactly.
pub fn validate_parameters(n: u64, d: u64, tau: u32, q: u64, p: u128) -> bool {
    p_lower_bound(n, d, tau, q) <= BigUint::from(p)
}

/// The right-hand side of [`validate_parameters`].
pub fn p_lower_bound(n: u64, d: u64, tau: u32, q: u64) -> BigUint {
    let two = BigUint::from(2u32);
    two * BigUint::from(n) * BigUint::from(d).pow(tau) * BigUint::from(q).pow(2 * tau + 1)
        + BigUint::from(1u32)
}

/// `x mod p`, rejecting magnitudes the centered lift could not recover.
pub fn phi(x: i128, modulus: PrimeModulus) -> Result<Fp, FieldError> {
    if x.unsigned_abs() > modulus.half() {
        return Err(FieldError::EncodingOverflow {
            value: x,
            half: modulus.half(),
        });
    }
    Ok(Fp::from_i128(x, modulus))
}

/// The representative of `e` in `[-(p-1)/2, (p-1)/2]`.
pub fn centered_lift(e: Fp) -> i128 {
    let v = e.value();
    if v > e.modulus().half() {
        -((e.modulus().value() - v) as i128)
    } else {
        v as i128
    }
}

/// Finds `(a, b)` with `a = x b (mod p)`, `|a| <= num_bound` and
/// `0 < b <= den_bound` by the half-extended Euclidean algorithm. The answer is
/// unique when `2 num_bound den_bound < p`.
pub fn rational_reconstruct(x: Fp, num_bound: u128, den_bound: u128) -> Option<(i128, i128)> {
    let p = x.modulus().value();
    let (mut r0, mut r1) = (p, x.value());
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 > num_bound {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        let next = t0.checked_sub(i128::try_from(q).ok()?.checked_mul(t1)?)?;
        (t0, t1) = (t1, next);
    }
    let b = t1.unsigned_abs();
    if b == 0 || b > den_bound {
        return None;
    }
    let a = i128::try_from(r1).ok()?;
    Some(if t1 < 0 { (-a, -t1) } else { (a, t1) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f17() -> PrimeModulus {
        PrimeModulus::new(17).unwrap()
    }

    /// Extended Euclid inverse, independent of the Fermat route in `Fp::inv`.
    fn egcd_inverse(a: i128, p: i128) -> i128 {
        let (mut r0, mut r1) = (a, p);
        let (mut s0, mut s1) = (1i128, 0i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        assert_eq!(r0, 1);
        s0.rem_euclid(p)
    }

    #[test]
    fn bound_examples() {
        assert!(validate_parameters(40, 1, 3, 2, 20483));
        assert_eq!(p_lower_bound(40, 1, 3, 2), BigUint::from(10241u32));
        assert!(validate_parameters(1, 1, 1, 1, 5));
        assert_eq!(p_lower_bound(1, 1, 1, 1), BigUint::from(3u32));
        assert!(!validate_parameters(40, 1000, 3, 1024, (1u128 << 61) - 1));
    }

    #[test]
    fn large_bound_magnitude() {
        // 2*40*1000^3*1024^7 ~ 9.5e31
        let b = p_lower_bound(40, 1000, 3, 1024);
        let expect =
            BigUint::from(2u32) * 40u32 * BigUint::from(10u32).pow(9) * BigUint::from(2u32).pow(70)
                + BigUint::from(1u32);
        assert_eq!(b, expect);
        assert!(b > BigUint::from(1u128 << 61));
    }

    #[test]
    fn phi_and_lift_examples() {
        let m = f17();
        assert_eq!(phi(-3, m).unwrap().value(), 14);
        assert_eq!(phi(0, m).unwrap().value(), 0);
        assert_eq!(phi(8, m).unwrap().value(), 8);
        assert!(matches!(
            phi(9, m),
            Err(FieldError::EncodingOverflow { .. })
        ));
        assert!(matches!(
            phi(-9, m),
            Err(FieldError::EncodingOverflow { .. })
        ));
        assert_eq!(centered_lift(Fp::new(15, m)), -2);
        assert_eq!(centered_lift(Fp::new(8, m)), 8);
        assert_eq!(centered_lift(Fp::new(0, m)), 0);
    }

    #[test]
    fn arith_examples() {
        let m = f17();
        let a = |v| Fp::new(v, m);
        assert_eq!(Fp::arith(ArithOp::Add, a(9), a(12)).unwrap().value(), 4);
        let inv5 = Fp::arith(ArithOp::Inv, a(5), a(0)).unwrap();
        assert_eq!(inv5.value(), 7);
        assert_eq!(inv5.value() as i128, egcd_inverse(5, 17));
        assert_eq!((inv5 * a(5)).value(), 1);
        assert_eq!(Fp::arith(ArithOp::Pow, a(2), a(4)).unwrap().value(), 16);
        assert_eq!(
            Fp::arith(ArithOp::Div, a(1), a(0)),
            Err(FieldError::DivisionByZero)
        );
        let other = Fp::new(3, PrimeModulus::new(19).unwrap());
        assert!(matches!(
            Fp::arith(ArithOp::Mul, a(3), other),
            Err(FieldError::ModulusMismatch {
                left: 17,
                right: 19
            })
        ));
    }

    #[test]
    fn lift_inverts_phi_exhaustively() {
        for p in [3u128, 17, 101, 10007] {
            let m = PrimeModulus::new(p).unwrap();
            let h = m.half() as i128;
            for x in -h..=h {
                assert_eq!(centered_lift(phi(x, m).unwrap()), x);
            }
        }
    }

    #[test]
    fn inverse_matches_euclid_for_all_residues() {
        let m = PrimeModulus::new(10007).unwrap();
        for v in 1..10007u128 {
            let inv = Fp::new(v, m).inv().unwrap();
            assert_eq!(inv.value() as i128, egcd_inverse(v as i128, 10007));
        }
    }

    #[test]
    fn rational_reconstruction() {
        let m = PrimeModulus::new(1_000_003).unwrap();
        for (a, b) in [(3i128, 7i128), (-25, 13), (0, 5), (499, 1), (-1, 499)] {
            let x = Fp::from_i128(a, m) * Fp::from_i128(b, m).inv().unwrap();
            let (ra, rb) = rational_reconstruct(x, 500, 500).unwrap();
            assert_eq!(ra * b, a * rb);
            assert!(rb > 0);
        }
        let big = PrimeModulus::new(PrimeModulus::MERSENNE_127).unwrap();
        let (a, b) = (-123_456_789_012_345_678i128, 987_654_321_098_765i128);
        let x = Fp::from_i128(a, big) * Fp::from_i128(b, big).inv().unwrap();
        let (ra, rb) = rational_reconstruct(x, 1 << 60, 1 << 60).unwrap();
        assert_eq!((ra as f64) / (rb as f64), (a as f64) / (b as f64));
        assert_eq!(ra * b, a * rb);
    }

    #[test]
    fn vector_ops() {
        let m = f17();
        let x = FieldVector::from_i128s(m, &[1, 2]);
        let y = FieldVector::from_i128s(m, &[3, 4]);
        assert_eq!(x.dot(&y).value(), 11);
        assert_eq!(
            x.add(&y).iter().map(|e| e.value()).collect::<Vec<_>>(),
            vec![4, 6]
        );
        let padded = FieldVector::from_i128s(m, &[1, 2, 3]).zero_padded(2);
        assert_eq!(padded.len(), 4);
        let parts = padded.partition(2).unwrap();
        assert_eq!(
            parts[1].iter().map(|e| e.value()).collect::<Vec<_>>(),
            vec![3, 0]
        );
        assert!(FieldVector::from_i128s(m, &[1, 2, 3]).partition(2).is_err());
    }

    proptest! {
        #[test]
        fn field_axioms(a in 0u128..(1u128 << 61) - 1, b in 0u128..(1u128 << 61) - 1, c in 0u128..(1u128 << 61) - 1) {
            let m = PrimeModulus::new(PrimeModulus::MERSENNE_61).unwrap();
            let (a, b, c) = (Fp::new(a, m), Fp::new(b, m), Fp::new(c, m));
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!((a * b) * c, a * (b * c));
            prop_assert_eq!(a * (b + c), a * b + a * c);
            prop_assert_eq!(a - b + b, a);
            prop_assert_eq!(a + (-a), Fp::zero(m));
            if !a.is_zero() {
                prop_assert_eq!(a * a.inv().unwrap(), Fp::one(m));
            }
        }

        #[test]
        fn field_axioms_127(a in any::<u128>(), b in any::<u128>(), c in any::<u128>()) {
            let m = PrimeModulus::new(PrimeModulus::MERSENNE_127).unwrap();
            let (a, b, c) = (Fp::new(a, m), Fp::new(b, m), Fp::new(c, m));
            prop_assert_eq!((a * b) * c, a * (b * c));
            prop_assert_eq!(a * (b + c), a * b + a * c);
            if !a.is_zero() {
                prop_assert_eq!(a * a.inv().unwrap(), Fp::one(m));
            }
        }

        #[test]
        fn bound_is_monotone_in_p(n in 1u64..50, d in 1u64..20, tau in 1u32..4, q in 1u64..64, p in 3u128..u128::MAX / 2, bump in 0u128..1_000_000) {
            if validate_parameters(n, d, tau, q, p) {
                prop_assert!(validate_parameters(n, d, tau, q, p + bump));
            }
        }
    }
}
