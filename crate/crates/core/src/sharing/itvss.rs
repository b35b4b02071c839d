use std::collections::BTreeSet;

use rand::Rng;

use crate::field::{FieldVector, Fp};

use super::domain::lagrange_weights;
use super::lcc::lcc_share;
use super::{EvaluationDomain, SharingError, SharingParams};

/// What party `i` receives from a dealer: `row[j] = S(alpha_j, alpha_i)` and
/// `col[j] = S(alpha_i, alpha_j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartyView {
    pub row: Vec<FieldVector>,
    pub col: Vec<FieldVector>,
}

impl PartyView {
    /// The party's univariate share `S(alpha_i, 0) = f(alpha_i)`.
    pub fn share(
        &self,
        domain: &EvaluationDomain,
        deg: usize,
    ) -> Result<FieldVector, SharingError> {
        let zero = Fp::zero(domain.modulus());
        let w = lagrange_weights(&domain.alphas()[..deg + 1], zero)?;
        let len = self.col.first().map_or(0, |c| c.len());
        let mut acc = FieldVector::zeros(domain.modulus(), len);
        for (wj, cj) in w.iter().zip(&self.col) {
            acc.add_assign(&cj.scale(*wj));
        }
        Ok(acc)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BivariateSharing {
    pub dealer: usize,
    pub views: Vec<PartyView>,
}

/// Deals `S(x, y) = f(x) + y R(x, y)`, where `f` is the LCC polynomial of the
/// secret and `R` is uniform with degree `m+t-1` in `x` and `m+t-2` in `y`.
pub fn itvss_distribute<R: Rng + ?Sized>(
    dealer: usize,
    secret: &FieldVector,
    params: SharingParams,
    domain: &EvaluationDomain,
    rng: &mut R,
) -> Result<BivariateSharing, SharingError> {
    let base = lcc_share(secret, params, domain, rng)?;
    let deg = params.degree();
    let modulus = domain.modulus();
    let len = base.first().map_or(0, |s| s.value.len());
    // r[a][b] is the coefficient vector of x^a y^b
    let r: Vec<Vec<FieldVector>> = (0..=deg)
        .map(|_| {
            (0..deg)
                .map(|_| FieldVector::random(modulus, len, rng))
                .collect()
        })
        .collect();
    let alphas = domain.alphas();
    let n = alphas.len();
    let eval = |xi: usize, yi: usize| -> FieldVector {
        let (x, y) = (alphas[xi], alphas[yi]);
        let mut acc = FieldVector::zeros(modulus, len);
        let mut xp = Fp::one(modulus);
        for ra in &r {
            let mut yp = y;
            for rab in ra {
                acc.add_assign(&rab.scale(xp * yp));
                yp *= y;
            }
            xp *= x;
        }
        acc.add(&base[xi].value)
    };
    let grid: Vec<Vec<FieldVector>> = (0..n)
        .map(|xi| (0..n).map(|yi| eval(xi, yi)).collect())
        .collect();
    let views = (0..n)
        .map(|i| PartyView {
            row: (0..n).map(|j| grid[j][i].clone()).collect(),
            col: (0..n).map(|j| grid[i][j].clone()).collect(),
        })
        .collect();
    Ok(BivariateSharing { dealer, views })
}

/// Weights predicting every point past the first `deg + 1` from those.
fn extension_weights(domain: &EvaluationDomain, deg: usize) -> Result<Vec<Vec<Fp>>, SharingError> {
    let alphas = domain.alphas();
    let basis = &alphas[..deg + 1];
    alphas[deg + 1..]
        .iter()
        .map(|&x| lagrange_weights(basis, x))
        .collect()
}

fn on_low_degree(values: &[FieldVector], ext: &[Vec<Fp>], deg: usize) -> bool {
    if values.len() != deg + 1 + ext.len() {
        return false;
    }
    let len = values[0].len();
    if values.iter().any(|v| v.len() != len) {
        return false;
    }
    ext.iter().zip(&values[deg + 1..]).all(|(w, target)| {
        (0..len).all(|k| {
            let pred = w
                .iter()
                .zip(values)
                .fold(Fp::zero(target.modulus()), |acc, (wl, vl)| {
                    acc + *wl * vl.as_slice()[k]
                });
            pred == target.as_slice()[k]
        })
    })
}

/// Dealers with at least one failed check among `verifiers`: pairwise
/// `row_i[j] == col_j[i]`, and every row and column on a degree-`m+t-1`
/// polynomial.
pub fn itvss_verify(
    sharings: &[BivariateSharing],
    verifiers: &[usize],
    params: SharingParams,
    domain: &EvaluationDomain,
) -> Result<BTreeSet<usize>, SharingError> {
    domain.check(params)?;
    let deg = params.degree();
    let ext = extension_weights(domain, deg)?;
    let mut accused = BTreeSet::new();
    for s in sharings {
        let mut bad = false;
        'outer: for &i in verifiers {
            let vi = &s.views[i];
            if !on_low_degree(&vi.row, &ext, deg) || !on_low_degree(&vi.col, &ext, deg) {
                bad = true;
                break;
            }
            for &j in verifiers {
                if vi.row[j] != s.views[j].col[i] {
                    bad = true;
                    break 'outer;
                }
            }
        }
        if bad {
            accused.insert(s.dealer);
        }
    }
    Ok(accused)
}
