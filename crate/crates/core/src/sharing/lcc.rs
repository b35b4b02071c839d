use rand::Rng;

use crate::field::{FieldVector, Fp};

use super::domain::{ensure_distinct, lagrange_weights};
use super::{EvaluationDomain, SharingError, SharingParams};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Share {
    pub owner: usize,
    pub point: Fp,
    pub value: FieldVector,
}

/// LCC sharing of `secret` (length divisible by `m`) with fresh uniform
/// randomness at the `t` randomness anchors.
pub fn lcc_share<R: Rng + ?Sized>(
    secret: &FieldVector,
    params: SharingParams,
    domain: &EvaluationDomain,
    rng: &mut R,
) -> Result<Vec<Share>, SharingError> {
    domain.check(params)?;
    let parts = secret.partition(params.m)?;
    let len = parts.first().map_or(0, |p| p.len());
    let randomness: Vec<FieldVector> = (0..params.t)
        .map(|_| FieldVector::random(domain.modulus(), len, rng))
        .collect();
    share_with_anchors(&parts, &randomness, domain)
}

/// Sharing whose anchor values are all given: `secrets` at the first `m`
/// betas and `randomness` at the remaining `t`.
pub fn share_with_anchors(
    secrets: &[FieldVector],
    randomness: &[FieldVector],
    domain: &EvaluationDomain,
) -> Result<Vec<Share>, SharingError> {
    let anchors: Vec<&FieldVector> = secrets.iter().chain(randomness).collect();
    if anchors.len() != domain.betas().len() {
        return Err(SharingError::LengthMismatch {
            expected: domain.betas().len(),
            actual: anchors.len(),
        });
    }
    let len = anchors.first().map_or(0, |a| a.len());
    if let Some(bad) = anchors.iter().find(|a| a.len() != len) {
        return Err(SharingError::LengthMismatch {
            expected: len,
            actual: bad.len(),
        });
    }
    Ok(domain
        .alphas()
        .iter()
        .zip(domain.share_weights())
        .enumerate()
        .map(|(owner, (&alpha, w))| Share {
            owner,
            point: alpha,
            value: combine(w, &anchors, domain, len),
        })
        .collect())
}

fn combine(
    weights: &[Fp],
    vectors: &[&FieldVector],
    domain: &EvaluationDomain,
    len: usize,
) -> FieldVector {
    let mut acc = FieldVector::zeros(domain.modulus(), len);
    for (&w, v) in weights.iter().zip(vectors) {
        if !w.is_zero() {
            acc.add_assign(&v.scale(w));
        }
    }
    acc
}

/// Interpolates the degree-`deg` polynomial through the first `deg + 1`
/// shares and evaluates it at each target; the results are concatenated.
pub fn reconstruct(
    shares: &[Share],
    deg: usize,
    targets: &[Fp],
) -> Result<FieldVector, SharingError> {
    if shares.len() < deg + 1 {
        return Err(SharingError::Threshold {
            needed: deg + 1,
            available: shares.len(),
        });
    }
    let points: Vec<Fp> = shares.iter().map(|s| s.point).collect();
    ensure_distinct(&points)?;
    let used = &shares[..deg + 1];
    let modulus = used[0].point.modulus();
    let len = used[0].value.len();
    let values: Vec<&FieldVector> = used.iter().map(|s| &s.value).collect();
    let mut out = Vec::with_capacity(len * targets.len());
    for &target in targets {
        let w = lagrange_weights(&points[..deg + 1], target)?;
        let mut acc = FieldVector::zeros(modulus, len);
        for (&wj, v) in w.iter().zip(&values) {
            acc.add_assign(&v.scale(wj));
        }
        out.extend_from_slice(acc.as_slice());
    }
    Ok(FieldVector::new(modulus, out)?)
}

/// Recovers the shared secret from its `m` anchors.
pub fn reconstruct_secret(
    shares: &[Share],
    params: SharingParams,
    domain: &EvaluationDomain,
) -> Result<FieldVector, SharingError> {
    reconstruct(shares, params.degree(), domain.secret_anchors())
}

/// Applies `h` (coefficients lowest first) to each party's value.
pub fn eval_poly_on_shares(share_values: &[Fp], h_coeffs: &[Fp]) -> Vec<Fp> {
    share_values.iter().map(|&x| horner(h_coeffs, x)).collect()
}

pub(crate) fn horner(coeffs: &[Fp], x: Fp) -> Fp {
    coeffs
        .iter()
        .rev()
        .fold(Fp::zero(x.modulus()), |acc, &c| acc * x + c)
}

/// Entry-wise [`eval_poly_on_shares`] on vector shares.
pub fn eval_poly_on_vector_shares(shares: &[Share], h_coeffs: &[Fp]) -> Vec<Share> {
    shares
        .iter()
        .map(|s| Share {
            owner: s.owner,
            point: s.point,
            value: FieldVector::new(s.value.modulus(), eval_poly_on_shares(&s.value, h_coeffs))
                .expect("same modulus"),
        })
        .collect()
}
