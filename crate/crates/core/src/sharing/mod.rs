//! Threshold and Lagrange-coded sharing over `F_p`: LCC encoding, Lagrange
//! reconstruction, Berlekamp-Welch decoding, bivariate verifiable sharing and
//! re-randomization.

mod domain;
mod itvss;
mod lcc;
pub mod linalg;
mod poly;
mod rerandomize;
mod rs;

use thiserror::Error;

use crate::field::FieldError;

pub use domain::{lagrange_weights, EvaluationDomain};
pub use itvss::{itvss_distribute, itvss_verify, BivariateSharing, PartyView};
pub use lcc::{
    eval_poly_on_shares, eval_poly_on_vector_shares, lcc_share, reconstruct, reconstruct_secret,
    share_with_anchors, Share,
};
pub use poly::Poly;
pub use rerandomize::{
    masking_shares, recombine, rerandomize, subshare, subshare_with, SubSharings,
};
pub use rs::{capability, rs_decode, rs_decode_shares, RsDecoding, VectorDecoding};

pub(crate) use lcc::horner;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SharingError {
    #[error("need {needed} shares, have {available}")]
    Threshold { needed: usize, available: usize },
    #[error("duplicate evaluation point {0}")]
    DuplicatePoint(u128),
    #[error("invalid evaluation domain: {0}")]
    Domain(String),
    #[error("invalid sharing parameters: {0}")]
    Params(String),
    #[error("expected length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct SharingParams {
    pub n: usize,
    pub m: usize,
    pub t: usize,
}

impl SharingParams {
    pub fn new(n: usize, m: usize, t: usize) -> Result<Self, SharingError> {
        if m == 0 {
            return Err(SharingError::Params("m must be at least 1".into()));
        }
        if n < m + t {
            return Err(SharingError::Params(format!(
                "n = {n} is below m + t = {}",
                m + t
            )));
        }
        Ok(Self { n, m, t })
    }

    /// Degree `m + t - 1` of each sharing polynomial.
    pub fn degree(&self) -> usize {
        self.m + self.t - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FieldVector, Fp, PrimeModulus};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn modulus(p: u128) -> PrimeModulus {
        PrimeModulus::new(p).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SharingParams::new(3, 0, 1).is_err());
        assert!(SharingParams::new(2, 2, 1).is_err());
        assert_eq!(SharingParams::new(5, 2, 1).unwrap().degree(), 2);
    }

    #[test]
    fn standard_domain_layout() {
        let p = SharingParams::new(4, 1, 2).unwrap();
        let d = EvaluationDomain::standard(modulus(17), p).unwrap();
        let v: Vec<u128> = d
            .alphas()
            .iter()
            .chain(d.betas())
            .map(|e| e.value())
            .collect();
        assert_eq!(v, vec![1, 2, 3, 4, 5, 6, 7]);
        assert!(EvaluationDomain::standard(modulus(7), p).is_err());
    }

    #[test]
    fn shamir_example() {
        let m = modulus(17);
        let f = Poly::new(m, vec![Fp::new(5, m), Fp::new(2, m)]);
        let shares: Vec<Share> = (1..=3)
            .map(|a| {
                let point = Fp::new(a, m);
                Share {
                    owner: a as usize - 1,
                    point,
                    value: FieldVector::new(m, vec![f.eval(point)]).unwrap(),
                }
            })
            .collect();
        let vals: Vec<u128> = shares.iter().map(|s| s.value[0].value()).collect();
        assert_eq!(vals, vec![7, 9, 11]);
        for pair in [[0usize, 1], [0, 2], [1, 2]] {
            let sub: Vec<Share> = pair.iter().map(|&i| shares[i].clone()).collect();
            assert_eq!(reconstruct(&sub, 1, &[Fp::zero(m)]).unwrap()[0].value(), 5);
        }
        assert!(matches!(
            reconstruct(&shares[..1], 1, &[Fp::zero(m)]),
            Err(SharingError::Threshold { .. })
        ));
    }

    #[test]
    fn constant_sharing_without_randomness() {
        let m = modulus(17);
        let p = SharingParams::new(4, 1, 0).unwrap();
        let d = EvaluationDomain::standard(m, p).unwrap();
        let secret = FieldVector::from_i128s(m, &[9, 3]);
        let shares = lcc_share(&secret, p, &d, &mut ChaCha20Rng::seed_from_u64(0)).unwrap();
        assert!(shares.iter().all(|s| s.value == secret));
        assert_eq!(
            reconstruct(&shares[2..3], 0, d.secret_anchors()).unwrap(),
            secret
        );
    }

    #[test]
    fn squaring_on_shares() {
        let m = modulus(17);
        let p = SharingParams::new(5, 1, 1).unwrap();
        let d = EvaluationDomain::standard(m, p).unwrap();
        let shares = lcc_share(
            &FieldVector::from_i128s(m, &[5]),
            p,
            &d,
            &mut ChaCha20Rng::seed_from_u64(1),
        )
        .unwrap();
        let h = [Fp::zero(m), Fp::zero(m), Fp::one(m)];
        let sq = eval_poly_on_vector_shares(&shares, &h);
        assert_eq!(
            reconstruct(&sq, 2, d.secret_anchors()).unwrap()[0].value(),
            8
        );
        let c = [Fp::new(4, m)];
        assert!(eval_poly_on_shares(&[Fp::new(3, m), Fp::new(9, m)], &c)
            .iter()
            .all(|v| v.value() == 4));
    }
}
