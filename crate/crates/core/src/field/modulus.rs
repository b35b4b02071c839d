use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::FieldError;

const LOW64: u128 = (1u128 << 64) - 1;
const MILLER_RABIN_ROUNDS: usize = 64;
const WITNESS_SEED: u64 = 0x6d69_6c6c_6572;

/// Full 256-bit product of two 128-bit words as `(hi, lo)`.
#[inline]
pub(crate) fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    let (a1, a0) = (a >> 64, a & LOW64);
    let (b1, b0) = (b >> 64, b & LOW64);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & LOW64) + (p10 & LOW64);
    let lo = (p00 & LOW64) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

/// Montgomery constants for `R = 2^128`; only used for moduli wider than 64 bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Montgomery {
    /// `-p^{-1} mod 2^128`
    neg_inv: u128,
    /// `R^2 mod p`
    r2: u128,
}

/// An odd prime modulus of at most 128 bits.
///
/// Construction checks primality: trial division below `2^32`, 64 rounds of
/// Miller-Rabin with a fixed-seed base sequence above.
///
/// Moduli are interned: the handle is one pointer wide, so field elements stay
/// small.
#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PrimeModulus {
    inner: &'static ModulusData,
}

#[derive(Debug, PartialEq, Eq)]
struct ModulusData {
    p: u128,
    mont: Option<Montgomery>,
}

static REGISTRY: OnceLock<Mutex<HashMap<u128, &'static ModulusData>>> = OnceLock::new();

impl PartialEq for PrimeModulus {
    #[inline]
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.inner, other.inner)
    }
}

impl Eq for PrimeModulus {}

impl std::hash::Hash for PrimeModulus {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.inner.p.hash(state);
    }
}

impl std::fmt::Debug for PrimeModulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PrimeModulus({})", self.inner.p)
    }
}

impl PrimeModulus {
    /// `2^61 - 1`
    pub const MERSENNE_61: u128 = (1u128 << 61) - 1;
    /// `2^127 - 1`
    pub const MERSENNE_127: u128 = (1u128 << 127) - 1;

    pub fn new(p: u128) -> Result<Self, FieldError> {
        if p < 3 {
            return Err(FieldError::ModulusTooSmall(p));
        }
        let registry = REGISTRY.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(&inner) = registry.lock().expect("modulus registry").get(&p) {
            return Ok(Self { inner });
        }
        let candidate = Self::unchecked(p);
        if !candidate.is_prime() {
            return Err(FieldError::NotPrime(p));
        }
        let mut map = registry.lock().expect("modulus registry");
        let inner = *map.entry(p).or_insert(candidate.inner);
        Ok(Self { inner })
    }

    /// The smallest prime `>= lower`, if one fits in 128 bits.
    pub fn next_prime(lower: u128) -> Option<Self> {
        let mut c = lower.max(3);
        if c.is_multiple_of(2) {
            c = c.checked_add(1)?;
        }
        loop {
            if let Ok(m) = Self::new(c) {
                return Some(m);
            }
            c = c.checked_add(2)?;
        }
    }

    fn unchecked(p: u128) -> Self {
        let mont = if p > u64::MAX as u128 && p % 2 == 1 {
            // Newton iteration doubles the number of correct low bits each step.
            let mut inv = p;
            for _ in 0..7 {
                inv = inv.wrapping_mul(2u128.wrapping_sub(p.wrapping_mul(inv)));
            }
            let r_mod = (u128::MAX % p + 1) % p;
            let r2 = mul_mod_slow(r_mod, r_mod, p);
            Some(Montgomery {
                neg_inv: inv.wrapping_neg(),
                r2,
            })
        } else {
            None
        };
        Self {
            inner: Box::leak(Box::new(ModulusData { p, mont })),
        }
    }

    #[inline]
    pub fn value(&self) -> u128 {
        self.inner.p
    }

    /// `(p - 1) / 2`, the largest magnitude representable under the centered lift.
    #[inline]
    pub fn half(&self) -> u128 {
        (self.inner.p - 1) / 2
    }

    pub fn bits(&self) -> u32 {
        128 - self.inner.p.leading_zeros()
    }

    #[inline]
    pub(crate) fn add(&self, a: u128, b: u128) -> u128 {
        let gap = self.inner.p - b;
        if a >= gap {
            a - gap
        } else {
            a + b
        }
    }

    #[inline]
    pub(crate) fn sub(&self, a: u128, b: u128) -> u128 {
        if a >= b {
            a - b
        } else {
            self.inner.p - (b - a)
        }
    }

    #[inline]
    pub(crate) fn mul(&self, a: u128, b: u128) -> u128 {
        match self.inner.mont {
            None => (a * b) % self.inner.p,
            Some(m) => {
                let t = self.redc(mul_wide(a, b), m);
                self.redc(mul_wide(t, m.r2), m)
            }
        }
    }

    #[inline]
    fn redc(&self, (hi, lo): (u128, u128), m: Montgomery) -> u128 {
        let k = lo.wrapping_mul(m.neg_inv);
        let (kh, kl) = mul_wide(k, self.inner.p);
        let (_, carry_lo) = lo.overflowing_add(kl);
        let (t, c1) = hi.overflowing_add(kh);
        let (t, c2) = t.overflowing_add(carry_lo as u128);
        if c1 || c2 || t >= self.inner.p {
            t.wrapping_sub(self.inner.p)
        } else {
            t
        }
    }

    pub(crate) fn pow(&self, base: u128, mut exp: u128) -> u128 {
        let mut acc = 1 % self.inner.p;
        let mut b = base % self.inner.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    fn is_prime(&self) -> bool {
        let p = self.inner.p;
        if p < (1u128 << 32) {
            return is_prime_trial(p as u64);
        }
        for small in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
            if p.is_multiple_of(small) {
                return false;
            }
        }
        let mut d = p - 1;
        let mut s = 0;
        while d.is_multiple_of(2) {
            d /= 2;
            s += 1;
        }
        let mut rng = ChaCha20Rng::seed_from_u64(WITNESS_SEED);
        'witness: for _ in 0..MILLER_RABIN_ROUNDS {
            let a = rng.random_range(2..p - 1);
            let mut x = self.pow(a, d);
            if x == 1 || x == p - 1 {
                continue;
            }
            for _ in 1..s {
                x = self.mul(x, x);
                if x == p - 1 {
                    continue 'witness;
                }
            }
            return false;
        }
        true
    }
}

impl TryFrom<String> for PrimeModulus {
    type Error = FieldError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        let p = s
            .trim()
            .parse::<u128>()
            .map_err(|_| FieldError::BadModulusLiteral(s.clone()))?;
        Self::new(p)
    }
}

impl From<PrimeModulus> for String {
    fn from(m: PrimeModulus) -> String {
        m.inner.p.to_string()
    }
}

impl std::fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.inner.p)
    }
}

fn is_prime_trial(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut f = 3u64;
    while f * f <= n {
        if n.is_multiple_of(f) {
            return false;
        }
        f += 2;
    }
    true
}

/// Double-and-add multiplication; used once per modulus to derive `R^2 mod p`.
fn mul_mod_slow(a: u128, b: u128, p: u128) -> u128 {
    let add = |x: u128, y: u128| if x >= p - y { x - (p - y) } else { x + y };
    let a = a % p;
    let mut acc = 0u128;
    for bit in (0..128).rev() {
        acc = add(acc, acc);
        if (b >> bit) & 1 == 1 {
            acc = add(acc, a);
        }
    }
    acc
}
