use rand::Rng;

use crate::field::Fp;
use crate::sharing::{EvaluationDomain, SharingParams};

use super::{Auth, Key, MacAuthority, MpcError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalarTriple<T> {
    pub gamma: T,
    pub omega: T,
    pub kappa: T,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DotTriple<T> {
    pub iota: Vec<T>,
    pub phi: Vec<T>,
    pub chi: T,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalarVectorTriple<T> {
    pub zeta: T,
    pub xi: Vec<T>,
    pub psi: Vec<T>,
}

/// Triples with consumed flags; taking one twice is an error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriplePool<X> {
    items: Vec<X>,
    used: Vec<bool>,
}

impl<X> TriplePool<X> {
    pub fn new(items: Vec<X>) -> Self {
        let used = vec![false; items.len()];
        Self { items, used }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn take(&mut self, index: usize) -> Result<&X, MpcError> {
        match self.used.get_mut(index) {
            None => Err(MpcError::Exhausted {
                used: self.items.len(),
            }),
            Some(true) => Err(MpcError::TripleReused { index }),
            Some(flag) => {
                *flag = true;
                Ok(&self.items[index])
            }
        }
    }

    /// Marks an item consumed without using it.
    pub fn burn(&mut self, index: usize) -> Result<(), MpcError> {
        self.take(index).map(|_| ())
    }

    pub fn consumed(&self) -> usize {
        self.used.iter().filter(|&&u| u).count()
    }

    pub fn items(&self) -> &[X] {
        &self.items
    }

    pub fn used_flags(&self) -> &[bool] {
        &self.used
    }

    pub fn into_items(self) -> Vec<X> {
        self.items
    }

    pub fn from_parts(items: Vec<X>, used: Vec<bool>) -> Self {
        assert_eq!(items.len(), used.len());
        Self { items, used }
    }
}

/// Per-party tagged material and the federator's matching key ledger.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dealt<A, K> {
    pub parties: Vec<TriplePool<A>>,
    pub ledger: Vec<TriplePool<K>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TripleKind {
    Scalar,
    Dot,
    ScalarVector,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TripleBatch {
    Scalar(Dealt<ScalarTriple<Auth>, ScalarTriple<Key>>),
    Dot(Dealt<DotTriple<Auth>, DotTriple<Key>>),
    ScalarVector(Dealt<ScalarVectorTriple<Auth>, ScalarVectorTriple<Key>>),
}

/// Randomness consumed by one low-cost iteration with `n` users.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TripleBudget {
    pub dot: usize,
    pub scalar: usize,
    pub scalar_vector: usize,
    pub random_vectors: usize,
    pub lambda: usize,
}

impl TripleBudget {
    pub fn per_iteration(n: usize, tau: usize) -> Self {
        Self {
            dot: n,
            scalar: tau.saturating_sub(1) * n + 1,
            scalar_vector: n + 1,
            random_vectors: n,
            lambda: 1,
        }
    }

    pub fn times(&self, iterations: usize) -> Self {
        Self {
            dot: self.dot * iterations,
            scalar: self.scalar * iterations,
            scalar_vector: self.scalar_vector * iterations,
            random_vectors: self.random_vectors * iterations,
            lambda: self.lambda * iterations,
        }
    }
}

/// Degree-`t` sharing of a scalar; entry `i` is party `i`'s share.
pub fn share_plain<R: Rng + ?Sized>(
    value: Fp,
    domain: &EvaluationDomain,
    t: usize,
    rng: &mut R,
) -> Vec<Fp> {
    let modulus = domain.modulus();
    debug_assert_eq!(domain.betas().len(), t + 1);
    let mut anchors = Vec::with_capacity(t + 1);
    anchors.push(value);
    anchors.extend((0..t).map(|_| Fp::random(modulus, rng)));
    domain
        .share_weights()
        .iter()
        .map(|w| {
            w.iter()
                .zip(&anchors)
                .fold(Fp::zero(modulus), |acc, (&wk, &a)| acc + wk * a)
        })
        .collect()
}

pub fn share_authenticated<R: Rng + ?Sized>(
    value: Fp,
    domain: &EvaluationDomain,
    t: usize,
    authority: &mut MacAuthority,
    rng: &mut R,
) -> (Vec<Auth>, Vec<Key>) {
    share_plain(value, domain, t, rng)
        .into_iter()
        .map(|s| authority.authenticate(s, rng))
        .unzip()
}

/// Entry-wise [`share_authenticated`]; outputs are indexed `[party][entry]`.
pub fn share_authenticated_vector<R: Rng + ?Sized>(
    values: &[Fp],
    domain: &EvaluationDomain,
    t: usize,
    authority: &mut MacAuthority,
    rng: &mut R,
) -> (Vec<Vec<Auth>>, Vec<Vec<Key>>) {
    let n = domain.n();
    let mut auths = vec![Vec::with_capacity(values.len()); n];
    let mut keys = vec![Vec::with_capacity(values.len()); n];
    for &v in values {
        let (a, k) = share_authenticated(v, domain, t, authority, rng);
        for (i, (ai, ki)) in a.into_iter().zip(k).enumerate() {
            auths[i].push(ai);
            keys[i].push(ki);
        }
    }
    (auths, keys)
}

fn transpose<A, K>(per_triple: Vec<(Vec<A>, Vec<K>)>, n: usize) -> Dealt<A, K> {
    let mut parties: Vec<Vec<A>> = (0..n)
        .map(|_| Vec::with_capacity(per_triple.len()))
        .collect();
    let mut ledger: Vec<Vec<K>> = (0..n)
        .map(|_| Vec::with_capacity(per_triple.len()))
        .collect();
    for (a, k) in per_triple {
        for (i, (ai, ki)) in a.into_iter().zip(k).enumerate() {
            parties[i].push(ai);
            ledger[i].push(ki);
        }
    }
    Dealt {
        parties: parties.into_iter().map(TriplePool::new).collect(),
        ledger: ledger.into_iter().map(TriplePool::new).collect(),
    }
}

/// Samples `count` triples of `kind` (vectors of length `len`), shares every
/// component with threshold `params.t` and tags every share.
pub fn ttp_generate_triples<R: Rng + ?Sized>(
    kind: TripleKind,
    count: usize,
    len: usize,
    params: SharingParams,
    domain: &EvaluationDomain,
    authority: &mut MacAuthority,
    rng: &mut R,
) -> TripleBatch {
    let modulus = domain.modulus();
    let n = params.n;
    let t = params.t;
    match kind {
        TripleKind::Scalar => {
            let per: Vec<_> = (0..count)
                .map(|_| {
                    let g = Fp::random(modulus, rng);
                    let w = Fp::random(modulus, rng);
                    let (ga, gk) = share_authenticated(g, domain, t, authority, rng);
                    let (wa, wk) = share_authenticated(w, domain, t, authority, rng);
                    let (ka, kk) = share_authenticated(g * w, domain, t, authority, rng);
                    let a = (0..n)
                        .map(|i| ScalarTriple {
                            gamma: ga[i],
                            omega: wa[i],
                            kappa: ka[i],
                        })
                        .collect();
                    let k = (0..n)
                        .map(|i| ScalarTriple {
                            gamma: gk[i],
                            omega: wk[i],
                            kappa: kk[i],
                        })
                        .collect();
                    (a, k)
                })
                .collect();
            TripleBatch::Scalar(transpose(per, n))
        }
        TripleKind::Dot => {
            let per: Vec<_> = (0..count)
                .map(|_| {
                    let iota: Vec<Fp> = (0..len).map(|_| Fp::random(modulus, rng)).collect();
                    let phi: Vec<Fp> = (0..len).map(|_| Fp::random(modulus, rng)).collect();
                    let chi = iota
                        .iter()
                        .zip(&phi)
                        .fold(Fp::zero(modulus), |acc, (&x, &y)| acc + x * y);
                    let (ia, ik) = share_authenticated_vector(&iota, domain, t, authority, rng);
                    let (pa, pk) = share_authenticated_vector(&phi, domain, t, authority, rng);
                    let (ca, ck) = share_authenticated(chi, domain, t, authority, rng);
                    let a = (0..n)
                        .map(|i| DotTriple {
                            iota: ia[i].clone(),
                            phi: pa[i].clone(),
                            chi: ca[i],
                        })
                        .collect();
                    let k = (0..n)
                        .map(|i| DotTriple {
                            iota: ik[i].clone(),
                            phi: pk[i].clone(),
                            chi: ck[i],
                        })
                        .collect();
                    (a, k)
                })
                .collect();
            TripleBatch::Dot(transpose(per, n))
        }
        TripleKind::ScalarVector => {
            let per: Vec<_> = (0..count)
                .map(|_| {
                    let zeta = Fp::random(modulus, rng);
                    let xi: Vec<Fp> = (0..len).map(|_| Fp::random(modulus, rng)).collect();
                    let psi: Vec<Fp> = xi.iter().map(|&x| zeta * x).collect();
                    let (za, zk) = share_authenticated(zeta, domain, t, authority, rng);
                    let (xa, xk) = share_authenticated_vector(&xi, domain, t, authority, rng);
                    let (pa, pk) = share_authenticated_vector(&psi, domain, t, authority, rng);
                    let a = (0..n)
                        .map(|i| ScalarVectorTriple {
                            zeta: za[i],
                            xi: xa[i].clone(),
                            psi: pa[i].clone(),
                        })
                        .collect();
                    let k = (0..n)
                        .map(|i| ScalarVectorTriple {
                            zeta: zk[i],
                            xi: xk[i].clone(),
                            psi: pk[i].clone(),
                        })
                        .collect();
                    (a, k)
                })
                .collect();
            TripleBatch::ScalarVector(transpose(per, n))
        }
    }
}
