use crate::field::Fp;
use crate::sharing::{lagrange_weights, EvaluationDomain};

use super::{
    mac_check, vsub, Auth, DotTriple, Key, Linear, MpcError, ScalarTriple, ScalarVectorTriple,
};

/// Party-side masked values `(s - gamma, v - omega)`.
pub fn mul_open<T: Linear>(s: &T, v: &T, triple: &ScalarTriple<T>) -> (T, T) {
    (s.sub(&triple.gamma), v.sub(&triple.omega))
}

/// `eps * delta + eps * omega + delta * gamma + kappa` for opened `eps`, `delta`.
pub fn mul_finish<T: Linear>(triple: &ScalarTriple<T>, eps: Fp, delta: Fp) -> T {
    triple
        .kappa
        .add(&triple.omega.scale(eps))
        .add(&triple.gamma.scale(delta))
        .add_public(eps * delta)
}

pub fn dot_open<T: Linear>(x: &[T], y: &[T], triple: &DotTriple<T>) -> (Vec<T>, Vec<T>) {
    (vsub(x, &triple.iota), vsub(y, &triple.phi))
}

pub fn dot_finish<T: Linear>(triple: &DotTriple<T>, eps: &[Fp], delta: &[Fp]) -> T {
    let mut acc = triple.chi.clone();
    let mut public = Fp::zero(triple_modulus(eps, delta));
    for k in 0..eps.len() {
        acc = acc
            .add(&triple.phi[k].scale(eps[k]))
            .add(&triple.iota[k].scale(delta[k]));
        public += eps[k] * delta[k];
    }
    acc.add_public(public)
}

fn triple_modulus(eps: &[Fp], delta: &[Fp]) -> crate::field::PrimeModulus {
    eps.first()
        .or(delta.first())
        .expect("nonempty opening")
        .modulus()
}

pub fn scale_open<T: Linear>(c: &T, x: &[T], triple: &ScalarVectorTriple<T>) -> (T, Vec<T>) {
    (c.sub(&triple.zeta), vsub(x, &triple.xi))
}

pub fn scale_finish<T: Linear>(triple: &ScalarVectorTriple<T>, eps: Fp, delta: &[Fp]) -> Vec<T> {
    triple
        .psi
        .iter()
        .zip(&triple.xi)
        .zip(delta)
        .map(|((psi, xi), &dk)| {
            psi.add(&xi.scale(eps))
                .add(&triple.zeta.scale(dk))
                .add_public(eps * dk)
        })
        .collect()
}

/// Interpolates the degree-`t` sharing through the first `t + 1`
/// contributions `(party, value)` at the secret anchor.
pub fn lagrange_open(
    domain: &EvaluationDomain,
    contributions: &[(usize, Fp)],
    t: usize,
) -> Result<Fp, MpcError> {
    if contributions.len() < t + 1 {
        return Err(MpcError::InsufficientVerified {
            verified: contributions.len(),
            needed: t + 1,
        });
    }
    let used = &contributions[..t + 1];
    let points: Vec<Fp> = used.iter().map(|&(i, _)| domain.alphas()[i]).collect();
    let w = lagrange_weights(&points, domain.secret_anchors()[0])?;
    Ok(used
        .iter()
        .zip(&w)
        .fold(Fp::zero(domain.modulus()), |acc, (&(_, v), &wi)| {
            acc + v * wi
        }))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Opened {
    pub value: Fp,
    /// Parties whose contribution failed the MAC check.
    pub rejected: Vec<usize>,
}

/// MAC-checks each `(party, share, key)` and opens from the verified ones.
pub fn open_authenticated(
    domain: &EvaluationDomain,
    contributions: &[(usize, Auth, Key)],
    alpha: Fp,
    t: usize,
) -> Result<Opened, MpcError> {
    let mut ok = Vec::with_capacity(contributions.len());
    let mut rejected = Vec::new();
    for (i, a, k) in contributions {
        if mac_check(a, k, alpha) {
            ok.push((*i, a.value));
        } else {
            rejected.push(*i);
        }
    }
    let value = lagrange_open(domain, &ok, t)?;
    Ok(Opened { value, rejected })
}

fn open_all(domain: &EvaluationDomain, values: &[Fp], t: usize) -> Result<Fp, MpcError> {
    let c: Vec<(usize, Fp)> = values.iter().copied().enumerate().collect();
    lagrange_open(domain, &c, t)
}

/// Multiplies degree-`t` sharings `s` and `v` (entry `i` held by party `i`)
/// with one triple per party, opening the masked values publicly.
pub fn beaver_multiply(
    domain: &EvaluationDomain,
    t: usize,
    s: &[Fp],
    v: &[Fp],
    triples: &[ScalarTriple<Fp>],
) -> Result<Vec<Fp>, MpcError> {
    let (e, d): (Vec<Fp>, Vec<Fp>) = (0..s.len())
        .map(|i| mul_open(&s[i], &v[i], &triples[i]))
        .unzip();
    let eps = open_all(domain, &e, t)?;
    let delta = open_all(domain, &d, t)?;
    Ok(triples
        .iter()
        .map(|tr| mul_finish(tr, eps, delta))
        .collect())
}

pub fn beaver_dot(
    domain: &EvaluationDomain,
    t: usize,
    x: &[Vec<Fp>],
    y: &[Vec<Fp>],
    triples: &[DotTriple<Fp>],
) -> Result<Vec<Fp>, MpcError> {
    let opened: Vec<(Vec<Fp>, Vec<Fp>)> = (0..x.len())
        .map(|i| dot_open(&x[i], &y[i], &triples[i]))
        .collect();
    let len = x.first().map_or(0, |v| v.len());
    let mut eps = Vec::with_capacity(len);
    let mut delta = Vec::with_capacity(len);
    for k in 0..len {
        eps.push(open_all(
            domain,
            &opened.iter().map(|o| o.0[k]).collect::<Vec<_>>(),
            t,
        )?);
        delta.push(open_all(
            domain,
            &opened.iter().map(|o| o.1[k]).collect::<Vec<_>>(),
            t,
        )?);
    }
    if len == 0 {
        return Ok(triples.iter().map(|tr| tr.chi).collect());
    }
    Ok(triples
        .iter()
        .map(|tr| dot_finish(tr, &eps, &delta))
        .collect())
}

pub fn beaver_scale_vector(
    domain: &EvaluationDomain,
    t: usize,
    c: &[Fp],
    x: &[Vec<Fp>],
    triples: &[ScalarVectorTriple<Fp>],
) -> Result<Vec<Vec<Fp>>, MpcError> {
    let opened: Vec<(Fp, Vec<Fp>)> = (0..c.len())
        .map(|i| scale_open(&c[i], &x[i], &triples[i]))
        .collect();
    let eps = open_all(domain, &opened.iter().map(|o| o.0).collect::<Vec<_>>(), t)?;
    let len = x.first().map_or(0, |v| v.len());
    let delta = (0..len)
        .map(|k| {
            open_all(
                domain,
                &opened.iter().map(|o| o.1[k]).collect::<Vec<_>>(),
                t,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(triples
        .iter()
        .map(|tr| scale_finish(tr, eps, &delta))
        .collect())
}
