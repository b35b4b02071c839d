use rand::Rng;

use crate::field::{FieldVector, Fp};

use super::domain::lagrange_weights;
use super::lcc::share_with_anchors;
use super::poly::Poly;
use super::{EvaluationDomain, Share, SharingError, SharingParams};

/// Sub-sharings dealt by each contributor during degree reduction; entry
/// `i` holds the `n` shares dealt by `contributors[i]`.
#[derive(Clone, Debug)]
pub struct SubSharings {
    pub contributors: Vec<usize>,
    pub dealt: Vec<Vec<Share>>,
}

/// Degree reduction of a degree-`deg` sharing: the first `deg + 1` parties
/// sub-share their Lagrange-weighted values with fresh degree-`m+t-1` LCC
/// sharings. With `transform = Some(M)` the new anchor values are
/// `M * (old anchor values)`.
pub fn subshare<R: Rng + ?Sized>(
    product_shares: &[Share],
    deg: usize,
    transform: Option<&[Vec<Fp>]>,
    params: SharingParams,
    domain: &EvaluationDomain,
    rng: &mut R,
) -> Result<SubSharings, SharingError> {
    let modulus = domain.modulus();
    subshare_with(product_shares, deg, transform, params, domain, &mut |len| {
        FieldVector::random(modulus, len, rng)
    })
}

pub fn subshare_with(
    product_shares: &[Share],
    deg: usize,
    transform: Option<&[Vec<Fp>]>,
    params: SharingParams,
    domain: &EvaluationDomain,
    randomness: &mut dyn FnMut(usize) -> FieldVector,
) -> Result<SubSharings, SharingError> {
    domain.check(params)?;
    if deg + 1 > domain.n() || product_shares.len() < deg + 1 {
        return Err(SharingError::Threshold {
            needed: deg + 1,
            available: product_shares.len().min(domain.n()),
        });
    }
    let used = &product_shares[..deg + 1];
    let points: Vec<Fp> = used.iter().map(|s| s.point).collect();
    let anchors = domain.secret_anchors();
    // weights[k][i] = L_i(beta_k)
    let weights = anchors
        .iter()
        .map(|&b| lagrange_weights(&points, b))
        .collect::<Result<Vec<_>, _>>()?;
    let m = anchors.len();
    let mut dealt = Vec::with_capacity(used.len());
    for (i, s) in used.iter().enumerate() {
        let own: Vec<Fp> = (0..m).map(|k| weights[k][i]).collect();
        let mixed: Vec<Fp> = match transform {
            None => own,
            Some(mat) => mat
                .iter()
                .map(|row| row.iter().zip(&own).map(|(&a, &b)| a * b).sum())
                .collect(),
        };
        let secrets: Vec<FieldVector> = mixed.iter().map(|&w| s.value.scale(w)).collect();
        let rand: Vec<FieldVector> = (0..params.t).map(|_| randomness(s.value.len())).collect();
        dealt.push(share_with_anchors(&secrets, &rand, domain)?);
    }
    Ok(SubSharings {
        contributors: used.iter().map(|s| s.owner).collect(),
        dealt,
    })
}

/// Each recipient sums the sub-shares addressed to it.
pub fn recombine(sub: &SubSharings, domain: &EvaluationDomain) -> Vec<Share> {
    let len = sub
        .dealt
        .first()
        .and_then(|d| d.first())
        .map_or(0, |s| s.value.len());
    domain
        .alphas()
        .iter()
        .enumerate()
        .map(|(owner, &point)| {
            let mut value = FieldVector::zeros(domain.modulus(), len);
            for d in &sub.dealt {
                value.add_assign(&d[owner].value);
            }
            Share {
                owner,
                point,
                value,
            }
        })
        .collect()
}

/// One-shot degree reduction without message-level simulation.
pub fn rerandomize<R: Rng + ?Sized>(
    product_shares: &[Share],
    deg: usize,
    params: SharingParams,
    domain: &EvaluationDomain,
    rng: &mut R,
) -> Result<Vec<Share>, SharingError> {
    let sub = subshare(product_shares, deg, None, params, domain, rng)?;
    Ok(recombine(&sub, domain))
}

/// Shares of a uniform degree-`deg` polynomial that vanishes at the secret
/// anchors; adding them to a degree-`deg` sharing refreshes its randomness
/// without changing the secret.
pub fn masking_shares<R: Rng + ?Sized>(
    len: usize,
    deg: usize,
    domain: &EvaluationDomain,
    rng: &mut R,
) -> Vec<FieldVector> {
    let modulus = domain.modulus();
    let anchors = domain.secret_anchors();
    let vanish = Poly::from_roots(modulus, anchors);
    let polys: Vec<Poly> = match deg.checked_sub(anchors.len()) {
        Some(free) => (0..len)
            .map(|_| Poly::random(modulus, free, rng).mul(&vanish))
            .collect(),
        None => vec![Poly::zero(modulus); len],
    };
    domain
        .alphas()
        .iter()
        .map(|&a| {
            FieldVector::new(modulus, polys.iter().map(|p| p.eval(a)).collect())
                .expect("same modulus")
        })
        .collect()
}
