//! Byzantine behaviors at the update level and the protocol level, and
//! dropout schedules.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantize::{QuantizeError, RealUpdate};
use crate::rng::{stream, Purpose, FEDERATOR};
use crate::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("{count} byzantine users exceed b = {b}")]
    TooManyByzantine { count: usize, b: usize },
    #[error("{count} colluders exceed t = {t}")]
    TooManyColluders { count: usize, t: usize },
    #[error("{count} dropouts per iteration exceed e = {e}")]
    TooManyDropouts { count: usize, e: usize },
    #[error("{count} random dropouts requested but only {available} honest users exist")]
    NotEnoughHonest { count: usize, available: usize },
    #[error("user index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("user {index} listed twice")]
    Duplicate { index: usize },
    #[error("shift has length {actual}, update has {expected}")]
    ShiftLength { expected: usize, actual: usize },
    #[error("alie_like needs at least one honest update")]
    EmptyContext,
    #[error("noise standard deviation must be finite and non-negative")]
    BadSigma,
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
}

/// Replacement of an honest model update before it enters the protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpdateAttack {
    SignFlip,
    Scale {
        factor: f64,
    },
    RandomNoise {
        sigma: f64,
    },
    /// Coordinate-wise `mean + z * std` of the honest updates.
    AlieLike {
        z: f64,
    },
    TargetedShift {
        shift: Vec<f64>,
    },
}

/// Deviation from the protocol messages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Misbehavior {
    /// Inconsistent bivariate shares, or a corrupted held share under MACs.
    InvalidSharing,
    /// Skips normalization and submits `factor` times the normalized update.
    CorruptNorm {
        #[serde(default = "default_norm_factor")]
        factor: f64,
    },
    /// Random values in place of the aggregation contributions.
    CorruptSigmaShares,
    /// Random tags, or random opened shares where no tags exist.
    CorruptMac,
    SilentDrop,
}

fn default_norm_factor() -> f64 {
    2.0
}

impl Misbehavior {
    pub const ALL: [Misbehavior; 5] = [
        Misbehavior::InvalidSharing,
        Misbehavior::CorruptNorm { factor: 2.0 },
        Misbehavior::CorruptSigmaShares,
        Misbehavior::CorruptMac,
        Misbehavior::SilentDrop,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Misbehavior::InvalidSharing => "invalid_sharing",
            Misbehavior::CorruptNorm { .. } => "corrupt_norm",
            Misbehavior::CorruptSigmaShares => "corrupt_sigma_shares",
            Misbehavior::CorruptMac => "corrupt_mac",
            Misbehavior::SilentDrop => "silent_drop",
        }
    }
}

/// When a dropped user goes silent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropPoint {
    /// Never participates in the iteration.
    BeforeSharing,
    /// Shares its inputs, then sends nothing to the federator.
    BeforeResults,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DropoutSchedule {
    #[default]
    None,
    Fixed {
        users: Vec<usize>,
        point: DropPoint,
    },
    /// `count` honest users drawn afresh every iteration.
    Random {
        count: usize,
        point: DropPoint,
    },
}

impl DropoutSchedule {
    fn per_iteration(&self) -> usize {
        match self {
            DropoutSchedule::None => 0,
            DropoutSchedule::Fixed { users, .. } => users.len(),
            DropoutSchedule::Random { count, .. } => *count,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct AttackPlan {
    #[serde(default)]
    pub byzantine: Vec<usize>,
    /// Passive recorders; may overlap with `byzantine`.
    #[serde(default)]
    pub colluders: Vec<usize>,
    #[serde(default)]
    pub dropouts: DropoutSchedule,
    /// Applied in order to every Byzantine user's update.
    #[serde(default)]
    pub update_attacks: Vec<UpdateAttack>,
    #[serde(default)]
    pub misbehavior: Option<Misbehavior>,
}

/// Per-party behavior for one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct Roles {
    pub misbehavior: Vec<Option<Misbehavior>>,
    pub dropout: Vec<Option<DropPoint>>,
}

impl Roles {
    pub fn honest(n: usize) -> Self {
        Self {
            misbehavior: vec![None; n],
            dropout: vec![None; n],
        }
    }

    pub fn n(&self) -> usize {
        self.dropout.len()
    }

    pub fn with_misbehavior(mut self, users: &[usize], kind: Misbehavior) -> Self {
        for &u in users {
            self.misbehavior[u] = Some(kind);
        }
        self
    }

    pub fn with_dropouts(mut self, users: &[usize], point: DropPoint) -> Self {
        for &u in users {
            self.dropout[u] = Some(point);
        }
        self
    }

    /// Users that take part in sharing at all.
    pub fn present(&self, user: usize) -> bool {
        self.dropout[user] != Some(DropPoint::BeforeSharing)
            && self.misbehavior[user] != Some(Misbehavior::SilentDrop)
    }

    /// Users whose messages to the federator arrive.
    pub fn responds(&self, user: usize) -> bool {
        self.present(user) && self.dropout[user].is_none()
    }

    pub fn is_honest(&self, user: usize) -> bool {
        self.misbehavior[user].is_none()
    }
}

fn check_indices(users: &[usize], n: usize) -> Result<(), AdversaryError> {
    let mut seen = BTreeSet::new();
    for &u in users {
        if u >= n {
            return Err(AdversaryError::IndexOutOfRange { index: u, n });
        }
        if !seen.insert(u) {
            return Err(AdversaryError::Duplicate { index: u });
        }
    }
    Ok(())
}

impl AttackPlan {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self, n: usize, b: usize, t: usize, e: usize) -> Result<(), AdversaryError> {
        check_indices(&self.byzantine, n)?;
        check_indices(&self.colluders, n)?;
        if self.byzantine.len() > b {
            return Err(AdversaryError::TooManyByzantine {
                count: self.byzantine.len(),
                b,
            });
        }
        if self.colluders.len() > t {
            return Err(AdversaryError::TooManyColluders {
                count: self.colluders.len(),
                t,
            });
        }
        let drops = self.dropouts.per_iteration();
        if drops > e {
            return Err(AdversaryError::TooManyDropouts { count: drops, e });
        }
        let honest = n - self.byzantine.len();
        match &self.dropouts {
            DropoutSchedule::Fixed { users, .. } => check_indices(users, n)?,
            DropoutSchedule::Random { count, .. } if *count > honest => {
                return Err(AdversaryError::NotEnoughHonest {
                    count: *count,
                    available: honest,
                })
            }
            _ => {}
        }
        Ok(())
    }

    /// Behavior of each party in `iteration`; random dropouts come from a
    /// stream keyed by `(seed, iteration)`.
    pub fn roles(&self, n: usize, seed: u64, iteration: usize) -> Roles {
        let mut roles = Roles::honest(n);
        if let Some(kind) = self.misbehavior {
            roles = roles.with_misbehavior(&self.byzantine, kind);
        }
        match &self.dropouts {
            DropoutSchedule::None => {}
            DropoutSchedule::Fixed { users, point } => roles = roles.with_dropouts(users, *point),
            DropoutSchedule::Random { count, point } => {
                let honest: Vec<usize> = (0..n).filter(|u| !self.byzantine.contains(u)).collect();
                let mut rng = stream(seed, iteration as u64, FEDERATOR, Purpose::Dropout);
                let picked: Vec<usize> = sample(&mut rng, honest.len(), (*count).min(honest.len()))
                    .into_iter()
                    .map(|i| honest[i])
                    .collect();
                roles = roles.with_dropouts(&picked, *point);
            }
        }
        roles
    }

    /// Replaces the updates of Byzantine users; `updates` must hold the
    /// honest updates of every user on entry.
    pub fn corrupt_updates<T: Real>(
        &self,
        updates: &mut [RealUpdate<T>],
        seed: u64,
        iteration: usize,
    ) -> Result<(), AdversaryError> {
        if self.update_attacks.is_empty() || self.byzantine.is_empty() {
            return Ok(());
        }
        let context: Vec<RealUpdate<T>> = updates
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.byzantine.contains(i))
            .map(|(_, u)| u.clone())
            .collect();
        for &b in &self.byzantine {
            let mut rng = stream(seed, iteration as u64, b as u64, Purpose::Attack);
            let mut u = updates[b].clone();
            for attack in &self.update_attacks {
                u = corrupt_update(&u, attack, &context, &mut rng)?;
            }
            updates[b] = u;
        }
        Ok(())
    }
}

/// One update-level attack applied to `honest`; `context` holds the honest
/// updates of the current iteration.
pub fn corrupt_update<T: Real, R: Rng + ?Sized>(
    honest: &RealUpdate<T>,
    kind: &UpdateAttack,
    context: &[RealUpdate<T>],
    rng: &mut R,
) -> Result<RealUpdate<T>, AdversaryError> {
    let u = honest.values();
    let out: Vec<T> = match kind {
        UpdateAttack::SignFlip => u.iter().map(|&x| -x).collect(),
        UpdateAttack::Scale { factor } => u.iter().map(|&x| x * T::of(*factor)).collect(),
        UpdateAttack::RandomNoise { sigma } => {
            let normal = Normal::new(0.0, *sigma).map_err(|_| AdversaryError::BadSigma)?;
            u.iter().map(|&x| x + T::of(normal.sample(rng))).collect()
        }
        UpdateAttack::AlieLike { z } => {
            if context.is_empty() {
                return Err(AdversaryError::EmptyContext);
            }
            let count = T::of(context.len() as f64);
            (0..u.len())
                .map(|k| {
                    let mean = context.iter().map(|c| c.values()[k]).sum::<T>() / count;
                    let var = context
                        .iter()
                        .map(|c| (c.values()[k] - mean).powi(2))
                        .sum::<T>()
                        / count;
                    mean + T::of(*z) * var.sqrt()
                })
                .collect()
        }
        UpdateAttack::TargetedShift { shift } => {
            if shift.len() != u.len() {
                return Err(AdversaryError::ShiftLength {
                    expected: u.len(),
                    actual: shift.len(),
                });
            }
            u.iter().zip(shift).map(|(&x, &s)| x + T::of(s)).collect()
        }
    };
    Ok(RealUpdate::new(out)?)
}
