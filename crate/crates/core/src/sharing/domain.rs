use std::collections::HashSet;

use crate::field::{Fp, PrimeModulus};

use super::{SharingError, SharingParams};

/// Share points `alphas` and anchor points `betas` (the first `m` anchors
/// carry secrets, the remaining `t` carry randomness).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvaluationDomain {
    modulus: PrimeModulus,
    alphas: Vec<Fp>,
    betas: Vec<Fp>,
    m: usize,
    // share_weights[i][k] = L_k(alpha_i) over the betas
    share_weights: Vec<Vec<Fp>>,
}

impl EvaluationDomain {
    /// `alphas = 1..=n`, `betas = n+1..=n+m+t`.
    pub fn standard(modulus: PrimeModulus, params: SharingParams) -> Result<Self, SharingError> {
        let n = params.n as u128;
        let k = (params.m + params.t) as u128;
        let alphas = (1..=n).map(|v| Fp::new(v, modulus)).collect();
        let betas = (n + 1..=n + k).map(|v| Fp::new(v, modulus)).collect();
        if n + k >= modulus.value() {
            return Err(SharingError::Domain(format!(
                "field of size {} cannot hold {} distinct nonzero points",
                modulus.value(),
                n + k
            )));
        }
        Self::new(alphas, betas, params.m)
    }

    pub fn new(alphas: Vec<Fp>, betas: Vec<Fp>, m: usize) -> Result<Self, SharingError> {
        let modulus = alphas
            .first()
            .or(betas.first())
            .map(|e| e.modulus())
            .ok_or_else(|| SharingError::Domain("empty domain".into()))?;
        let all: Vec<Fp> = alphas.iter().chain(&betas).copied().collect();
        if all.iter().any(|e| e.modulus() != modulus) {
            return Err(SharingError::Domain("points from different fields".into()));
        }
        if all.iter().any(|e| e.is_zero()) {
            return Err(SharingError::Domain("points must be nonzero".into()));
        }
        ensure_distinct(&all)?;
        if m > betas.len() {
            return Err(SharingError::Domain(format!(
                "{m} secret anchors but only {} betas",
                betas.len()
            )));
        }
        let share_weights = alphas
            .iter()
            .map(|&a| lagrange_weights(&betas, a))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            modulus,
            alphas,
            betas,
            m,
            share_weights,
        })
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn alphas(&self) -> &[Fp] {
        &self.alphas
    }

    pub fn betas(&self) -> &[Fp] {
        &self.betas
    }

    pub fn secret_anchors(&self) -> &[Fp] {
        &self.betas[..self.m]
    }

    /// Row `i` maps anchor values to party `i`'s share value.
    pub fn share_weights(&self) -> &[Vec<Fp>] {
        &self.share_weights
    }

    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    pub(crate) fn check(&self, params: SharingParams) -> Result<(), SharingError> {
        if self.alphas.len() != params.n
            || self.betas.len() != params.m + params.t
            || self.m != params.m
        {
            return Err(SharingError::Params(format!(
                "domain ({} alphas, {} betas) does not match n={}, m={}, t={}",
                self.alphas.len(),
                self.betas.len(),
                params.n,
                params.m,
                params.t
            )));
        }
        Ok(())
    }
}

pub(crate) fn ensure_distinct(points: &[Fp]) -> Result<(), SharingError> {
    let mut seen = HashSet::with_capacity(points.len());
    for p in points {
        if !seen.insert(p.value()) {
            return Err(SharingError::DuplicatePoint(p.value()));
        }
    }
    Ok(())
}

/// Lagrange basis values `L_j(target)` for the interpolation nodes `points`.
pub fn lagrange_weights(points: &[Fp], target: Fp) -> Result<Vec<Fp>, SharingError> {
    ensure_distinct(points)?;
    let one = Fp::one(target.modulus());
    let terms: Vec<(Fp, Fp)> = points
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            points
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .fold((one, one), |(n, d), (_, &xi)| {
                    (n * (target - xi), d * (xj - xi))
                })
        })
        .collect();
    // one inversion for all denominators
    let mut prefix = Vec::with_capacity(terms.len());
    let mut acc = one;
    for &(_, d) in &terms {
        prefix.push(acc);
        acc *= d;
    }
    let mut inv = acc.inv()?;
    let mut out = vec![one; terms.len()];
    for k in (0..terms.len()).rev() {
        out[k] = terms[k].0 * inv * prefix[k];
        inv *= terms[k].1;
    }
    Ok(out)
}
