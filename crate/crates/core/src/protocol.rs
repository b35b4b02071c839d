//! Pieces shared by both protocol engines: input quantization, the norm
//! interval test, ratio recovery and the iteration outcome.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::adversary::{AdversaryError, Misbehavior, Roles};
use crate::discriminator::{finalize_update, DiscriminatorError};
use crate::field::{rational_reconstruct, FieldError, FieldVector, Fp};
use crate::lobyitfl::MaterialError;
use crate::mpc::MpcError;
use crate::params::{ConfigError, ProtocolParams};
use crate::quantize::{
    dequantize_rational, embed, embed_unchecked, normalize, QuantizeError, QuantizedUpdate,
    RealUpdate, DEFAULT_NORM_FLOOR,
};
use crate::rng::{stream, Purpose, FEDERATOR};
use crate::sharing::SharingError;
use crate::Real;

/// Protocol step at which an iteration could not complete.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    NormDecode,
    SigmaDecode,
    RatioRecovery,
    NormOpen,
    BeaverOpen,
    SigmaOpen,
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Sharing(#[from] SharingError),
    #[error(transparent)]
    Mpc(#[from] MpcError),
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
    #[error(transparent)]
    Discriminator(#[from] DiscriminatorError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("expected {expected} updates of dimension {d}, got {actual}")]
    Inputs {
        expected: usize,
        actual: usize,
        d: usize,
    },
    #[error("iteration failed at {stage:?}")]
    IterationFailed { stage: Stage },
}

/// Why a user's update was left out of the aggregate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exclusion {
    Absent,
    InvalidSharing,
    NormCheck,
}

/// Quantized federator update and user updates (`None` for absent users),
/// zero-padded to a multiple of `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedInputs {
    pub root: QuantizedUpdate,
    pub users: Vec<Option<QuantizedUpdate>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct IterationContext {
    pub seed: u64,
    pub iteration: usize,
}

impl IterationContext {
    pub fn new(seed: u64, iteration: usize) -> Self {
        Self { seed, iteration }
    }

    pub fn rng(&self, party: u64, purpose: Purpose) -> rand_chacha::ChaCha20Rng {
        stream(self.seed, self.iteration as u64, party, purpose)
    }
}

#[derive(Clone, Debug)]
pub struct IterationOutcome<T> {
    pub update: Vec<T>,
    pub nu: Vec<T>,
    /// Set when no user survived or the trust scores summed to zero.
    pub degenerate: bool,
    pub included: Vec<usize>,
    pub excluded: BTreeMap<usize, Exclusion>,
    /// Parties whose messages were detected as corrupt and discarded.
    pub flagged: BTreeSet<usize>,
    /// Simulation-side value of the masking scalar.
    pub lambda: Fp,
    pub lambda_sigma1: Fp,
    pub lambda_sigma2: FieldVector,
    pub lambda_attempts: usize,
    pub inputs: QuantizedInputs,
}

fn quantize_one<T: Real>(
    params: &ProtocolParams,
    u: &RealUpdate<T>,
    factor: Option<f64>,
    rng: &mut rand_chacha::ChaCha20Rng,
) -> Result<QuantizedUpdate, ProtocolError> {
    let pad = params.padded_dim();
    let q = match normalize(u, T::of(DEFAULT_NORM_FLOOR)) {
        Ok(nu) => match factor {
            None => embed(&nu, params.q, params.modulus, rng)?,
            Some(c) => {
                let scaled: Vec<T> = nu.values().iter().map(|&x| x * T::of(c)).collect();
                embed_unchecked(&scaled, params.q, params.modulus, rng)?
            }
        },
        Err(QuantizeError::Degenerate { .. }) => QuantizedUpdate {
            values: FieldVector::zeros(params.modulus, u.len()),
            q: params.q,
        },
        Err(e) => return Err(e.into()),
    };
    Ok(QuantizedUpdate {
        values: q.values.zero_padded(pad),
        q: params.q,
    })
}

/// Normalizes and stochastically quantizes every present user's update and
/// the federator's. A zero update quantizes to zeros and later fails the norm
/// test.
pub fn quantize_inputs<T: Real>(
    params: &ProtocolParams,
    ctx: IterationContext,
    updates: &[RealUpdate<T>],
    u0: &RealUpdate<T>,
    roles: &Roles,
) -> Result<QuantizedInputs, ProtocolError> {
    if updates.len() != params.n
        || u0.len() != params.d
        || updates.iter().any(|u| u.len() != params.d)
    {
        return Err(ProtocolError::Inputs {
            expected: params.n,
            actual: updates.len(),
            d: params.d,
        });
    }
    let root = quantize_one(params, u0, None, &mut ctx.rng(FEDERATOR, Purpose::Quantize))?;
    let users = updates
        .iter()
        .enumerate()
        .map(|(j, u)| {
            if !roles.present(j) {
                return Ok(None);
            }
            let factor = match roles.misbehavior[j] {
                Some(Misbehavior::CorruptNorm { factor }) => Some(factor),
                _ => None,
            };
            quantize_one(params, u, factor, &mut ctx.rng(j as u64, Purpose::Quantize)).map(Some)
        })
        .collect::<Result<Vec<_>, ProtocolError>>()?;
    Ok(QuantizedInputs { root, users })
}

/// `|lift - q^2| < epsilon q^2`.
pub fn norm_passes(lift: i128, q: u64, epsilon: f64) -> bool {
    let q2 = (q as i128) * (q as i128);
    ((lift - q2).abs() as f64) < epsilon * q2 as f64
}

/// Recovers `Sigma_2 / Sigma_1` entry-wise from the masked pair, de-quantizes
/// and truncates to `d`.
pub(crate) fn recover_nu<T: Real>(
    params: &ProtocolParams,
    lambda_sigma1: Fp,
    lambda_sigma2: &FieldVector,
) -> Result<Vec<T>, ProtocolError> {
    let (n1, n2) = params.sigma_bounds()?;
    let inv = lambda_sigma1.inv()?;
    lambda_sigma2
        .iter()
        .take(params.d)
        .map(|&v| {
            let (a, b) =
                rational_reconstruct(v * inv, n2, n1).ok_or(ProtocolError::IterationFailed {
                    stage: Stage::RatioRecovery,
                })?;
            Ok(dequantize_rational(a, b, params.q)?)
        })
        .collect()
}

pub(crate) struct Aggregated<T> {
    pub update: Vec<T>,
    pub nu: Vec<T>,
    pub degenerate: bool,
}

/// Final update from the opened masked pair; a zero `lambda Sigma_1` gives a
/// zero update.
pub(crate) fn aggregate<T: Real>(
    params: &ProtocolParams,
    lambda_sigma1: Fp,
    lambda_sigma2: &FieldVector,
    u0: &RealUpdate<T>,
) -> Result<Aggregated<T>, ProtocolError> {
    if lambda_sigma1.is_zero() {
        return Ok(Aggregated {
            update: vec![T::zero(); params.d],
            nu: vec![T::zero(); params.d],
            degenerate: true,
        });
    }
    let nu = recover_nu(params, lambda_sigma1, lambda_sigma2)?;
    let fin = finalize_update(&nu, u0);
    Ok(Aggregated {
        update: fin.update,
        nu,
        degenerate: fin.degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_is_open() {
        assert!(norm_passes(64, 8, 0.02));
        assert!(norm_passes(65, 8, 0.02));
        assert!(!norm_passes(64 + 2, 8, 0.02 * 2.0 / 1.28));
        assert!(!norm_passes(256, 8, 0.6));
        assert!(!norm_passes(0, 8, 0.6));
    }
}
