//! Reference computations that share no code with `itfl-core`: plain `u128`
//! modular arithmetic, textbook Lagrange interpolation, exhaustive decoding
//! and integer aggregation.

use std::collections::BTreeMap;

use itertools::Itertools;

/// Discriminator coefficients as integers over `10^8`, lowest degree first.
pub const COEFF_NUMERATORS: [i128; 4] = [1_363_545, 18_603_530, 56_578_977, 46_897_526];
pub const COEFF_DENOMINATOR: i128 = 100_000_000;

pub fn reduce(x: i128, p: u128) -> u128 {
    x.rem_euclid(p as i128) as u128
}

/// `a * b mod p` for `p < 2^127`, by double-and-add above 64 bits.
pub fn mul(a: u128, b: u128, p: u128) -> u128 {
    let (mut a, mut b) = (a % p, b % p);
    if p < 1 << 64 {
        return a * b % p;
    }
    assert!(
        p < 1 << 127,
        "oracle arithmetic is limited to 127-bit moduli"
    );
    let mut acc = 0;
    while b > 0 {
        if b & 1 == 1 {
            acc = (acc + a) % p;
        }
        a = (a + a) % p;
        b >>= 1;
    }
    acc
}

pub fn sub(a: u128, b: u128, p: u128) -> u128 {
    (a % p + p - b % p) % p
}

/// Inverse by the extended Euclidean algorithm.
pub fn inv(a: u128, p: u128) -> u128 {
    let (mut r0, mut r1) = (p as i128, (a % p) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    assert!(r1 != 0, "zero has no inverse");
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    assert_eq!(r0, 1, "modulus is not prime");
    reduce(t0, p)
}

/// Value at `x` of the polynomial through `points`.
pub fn interpolate(points: &[(u128, u128)], x: u128, p: u128) -> u128 {
    let mut acc = 0;
    for (i, &(xi, yi)) in points.iter().enumerate() {
        let mut num = 1;
        let mut den = 1;
        for (k, &(xk, _)) in points.iter().enumerate() {
            if k != i {
                num = mul(num, sub(x, xk, p), p);
                den = mul(den, sub(xi, xk, p), p);
            }
        }
        acc = (acc + mul(yi, mul(num, inv(den, p), p), p)) % p;
    }
    acc
}

/// The unique codeword of dimension `k` within distance `radius` of the
/// received word, found by trying every `k`-subset of positions.
pub fn subset_decode(
    xs: &[u128],
    ys: &[u128],
    k: usize,
    radius: usize,
    p: u128,
) -> Option<Vec<u128>> {
    let n = xs.len();
    if n < k {
        return None;
    }
    for subset in (0..n).combinations(k) {
        let pts: Vec<(u128, u128)> = subset.iter().map(|&i| (xs[i], ys[i])).collect();
        let word: Vec<u128> = xs.iter().map(|&x| interpolate(&pts, x, p)).collect();
        let disagree = word.iter().zip(ys).filter(|(a, b)| a != b).count();
        if disagree <= radius {
            return Some(word);
        }
    }
    None
}

/// `round(num / den)` with ties away from zero.
fn round_div(num: i128, den: i128) -> i128 {
    let q = num / den;
    let r = num % den;
    if 2 * r.abs() >= den.abs() {
        q + num.signum() * den.signum()
    } else {
        q
    }
}

/// `round(h_k S q^(2(tau-k)))` from the decimal coefficients.
pub fn fixed_point_coeffs(q: u64, scale: u64) -> Vec<i128> {
    let tau = COEFF_NUMERATORS.len() - 1;
    COEFF_NUMERATORS
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let factor = (scale as i128) * (q as i128).pow(2 * (tau - k) as u32);
            round_div(c * factor, COEFF_DENOMINATOR)
        })
        .collect()
}

/// `h(x)` evaluated term by term from the decimal coefficients.
pub fn h(x: f64) -> f64 {
    COEFF_NUMERATORS
        .iter()
        .enumerate()
        .map(|(k, &c)| c as f64 / COEFF_DENOMINATOR as f64 * x.powi(k as i32))
        .sum()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sums {
    pub sigma1: i128,
    pub sigma2: Vec<i128>,
}

/// Integer trust-weighted sums over the users given as centered lifts.
pub fn exact_sums(coeffs: &[i128], root: &[i128], users: &[Vec<i128>]) -> Sums {
    let mut sigma1 = 0i128;
    let mut sigma2 = vec![0i128; root.len()];
    for u in users {
        let x: i128 = root.iter().zip(u).map(|(a, b)| a * b).sum();
        let mut hx = 0i128;
        for &c in coeffs.iter().rev() {
            hx = hx
                .checked_mul(x)
                .and_then(|v| v.checked_add(c))
                .expect("oracle overflow");
        }
        sigma1 += hx;
        for (s, &l) in sigma2.iter_mut().zip(u) {
            *s += hx * l;
        }
    }
    Sums { sigma1, sigma2 }
}

/// Users whose squared norm lies strictly inside `q^2 (1 +- eps)`.
pub fn norm_accepts(lifts: &[i128], q: u64, eps: f64) -> bool {
    let q2 = (q * q) as f64;
    let norm: i128 = lifts.iter().map(|x| x * x).sum();
    ((norm as f64) - q2).abs() < eps * q2
}

/// Smallest tolerance that no honest quantized unit vector can fail: with
/// per-entry rounding below one level, `| ||u||^2 - q^2 | < 2 q sqrt(d) + d`.
pub fn honest_norm_epsilon(q: u64, d: usize) -> f64 {
    let q = q as f64;
    (2.0 * q * (d as f64).sqrt() + d as f64) / (q * q)
}

pub type Histogram = BTreeMap<Vec<u128>, usize>;

pub fn histogram<I: IntoIterator<Item = Vec<u128>>>(items: I) -> Histogram {
    let mut h = Histogram::new();
    for item in items {
        *h.entry(item).or_default() += 1;
    }
    h
}

/// One standard deviation of a binomial count.
pub fn binomial_sd(trials: u64, prob: f64) -> f64 {
    (trials as f64 * prob * (1.0 - prob)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_arithmetic() {
        assert_eq!(inv(3, 17), 6);
        assert_eq!(sub(5, 9, 17), 13);
        let pts = [(1, 3), (2, 5), (3, 7)];
        assert_eq!(interpolate(&pts, 0, 101), 1);
        assert_eq!(round_div(-7, 2), -4);
        assert_eq!(round_div(5, 3), 2);
        let big = (1u128 << 127) - 1;
        assert_eq!(mul(big - 1, big - 1, big), 1);
    }

    #[test]
    fn decimal_polynomial() {
        assert_eq!(h(0.0), 0.01363545);
        assert!((h(1.0) - 1.23443578).abs() < 1e-12);
        assert_eq!(fixed_point_coeffs(1, 1), vec![0, 0, 1, 0]);
    }

    #[test]
    fn subset_decoder_corrects_within_radius() {
        let p = 101;
        let xs: Vec<u128> = (1..=7).collect();
        let word: Vec<u128> = xs.iter().map(|&x| (2 + 3 * x) % p).collect();
        let mut ys = word.clone();
        ys[1] = 50;
        ys[5] = 0;
        assert_eq!(subset_decode(&xs, &ys, 2, 2, p), Some(word));
    }
}
