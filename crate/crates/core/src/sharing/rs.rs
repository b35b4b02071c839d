use std::collections::BTreeSet;

use crate::field::{FieldVector, Fp};

use super::linalg::solve;
use super::poly::Poly;
use super::{Share, SharingError};

/// A successful Reed-Solomon decoding: the message polynomial and the
/// positions (indices into the received points) that disagree with it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RsDecoding {
    pub poly: Poly,
    pub errors: Vec<usize>,
}

/// Errors correctable with `received` points of a degree-`deg` code.
pub fn capability(received: usize, deg: usize) -> usize {
    received.saturating_sub(deg + 1) / 2
}

/// Berlekamp-Welch decoding of `(xs[i], ys[i])`. Erased positions are simply
/// not passed in. Returns `Ok(None)` when no polynomial of degree `deg` is
/// within the decoding radius.
pub fn rs_decode(xs: &[Fp], ys: &[Fp], deg: usize) -> Result<Option<RsDecoding>, SharingError> {
    if xs.len() != ys.len() {
        return Err(SharingError::LengthMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    super::domain::ensure_distinct(xs)?;
    let n = xs.len();
    let k = deg + 1;
    if n < k {
        return Ok(None);
    }
    let e = capability(n, deg);
    let modulus = xs[0].modulus();
    let q_len = e + k;
    let unknowns = q_len + e;
    let mut rows = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    for (&x, &y) in xs.iter().zip(ys) {
        let mut row = Vec::with_capacity(unknowns);
        let mut pw = Fp::one(modulus);
        let mut powers = Vec::with_capacity(q_len);
        for _ in 0..q_len {
            powers.push(pw);
            pw *= x;
        }
        row.extend_from_slice(&powers);
        row.extend(powers[..e].iter().map(|&p| -(y * p)));
        rows.push(row);
        rhs.push(y * powers[e]);
    }
    let Some(sol) = solve(rows, rhs, unknowns) else {
        return Ok(None);
    };
    let q = Poly::new(modulus, sol[..q_len].to_vec());
    let mut e_coeffs = sol[q_len..].to_vec();
    e_coeffs.push(Fp::one(modulus));
    let locator = Poly::new(modulus, e_coeffs);
    let Some((p, r)) = q.div_rem(&locator) else {
        return Ok(None);
    };
    if !r.is_zero() || p.degree().is_some_and(|d| d > deg) {
        return Ok(None);
    }
    let errors: Vec<usize> = (0..n).filter(|&i| p.eval(xs[i]) != ys[i]).collect();
    if errors.len() > e {
        return Ok(None);
    }
    Ok(Some(RsDecoding { poly: p, errors }))
}

/// Coordinate-wise decoding of vector shares: one polynomial per coordinate
/// and the union of disagreeing owners.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorDecoding {
    pub polys: Vec<Poly>,
    pub corrupted: BTreeSet<usize>,
}

impl VectorDecoding {
    /// Evaluates every coordinate at each target, concatenated per target.
    pub fn eval_at(&self, targets: &[Fp]) -> FieldVector {
        let modulus = targets
            .first()
            .map(|t| t.modulus())
            .or_else(|| self.polys.first().map(|p| p.modulus()))
            .expect("nonempty decoding");
        let out = targets
            .iter()
            .flat_map(|&t| self.polys.iter().map(move |p| p.eval(t)))
            .collect();
        FieldVector::new(modulus, out).expect("same modulus")
    }
}

pub fn rs_decode_shares(
    shares: &[Share],
    deg: usize,
) -> Result<Option<VectorDecoding>, SharingError> {
    let Some(first) = shares.first() else {
        return Ok(None);
    };
    let len = first.value.len();
    if let Some(bad) = shares.iter().find(|s| s.value.len() != len) {
        return Err(SharingError::LengthMismatch {
            expected: len,
            actual: bad.value.len(),
        });
    }
    let xs: Vec<Fp> = shares.iter().map(|s| s.point).collect();
    let cap = capability(shares.len(), deg);
    let mut polys = Vec::with_capacity(len);
    let mut corrupted = BTreeSet::new();
    for c in 0..len {
        let ys: Vec<Fp> = shares.iter().map(|s| s.value[c]).collect();
        let Some(dec) = rs_decode(&xs, &ys, deg)? else {
            return Ok(None);
        };
        corrupted.extend(dec.errors.iter().map(|&i| shares[i].owner));
        if corrupted.len() > cap {
            return Ok(None);
        }
        polys.push(dec.poly);
    }
    Ok(Some(VectorDecoding { polys, corrupted }))
}
