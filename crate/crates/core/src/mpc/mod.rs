//! Beaver-triple multiplication (scalar, dot product, scalar-vector) and
//! one-time MACs `alpha * s + beta` with homomorphic key tracking.

mod beaver;
mod mac;
mod triple;

use thiserror::Error;

use crate::field::{FieldError, Fp};
use crate::sharing::SharingError;

pub use beaver::{
    beaver_dot, beaver_multiply, beaver_scale_vector, dot_finish, dot_open, lagrange_open,
    mul_finish, mul_open, open_authenticated, scale_finish, scale_open, Opened,
};
pub use mac::{mac_check, mac_check_linear, mac_tag, Auth, Key, MacAuthority, MacKey};
pub use triple::{
    share_authenticated, share_authenticated_vector, share_plain, ttp_generate_triples, Dealt,
    DotTriple, ScalarTriple, ScalarVectorTriple, TripleBatch, TripleBudget, TripleKind, TriplePool,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MpcError {
    #[error("triple {index} was already consumed")]
    TripleReused { index: usize },
    #[error("triple pool exhausted after {used} triples")]
    Exhausted { used: usize },
    #[error("MAC key {id} was already used")]
    KeyReused { id: u64 },
    #[error("only {verified} verified contributions, need {needed}")]
    InsufficientVerified { verified: usize, needed: usize },
    #[error("expected length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Sharing(#[from] SharingError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Values that transform linearly under share arithmetic: plain shares,
/// tagged shares, and the federator's key mirrors.
pub trait Linear: Clone + std::fmt::Debug {
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn scale(&self, c: Fp) -> Self;
    /// Adds a public constant to the shared secret.
    fn add_public(&self, c: Fp) -> Self;
}

impl Linear for Fp {
    fn add(&self, other: &Self) -> Self {
        *self + *other
    }

    fn sub(&self, other: &Self) -> Self {
        *self - *other
    }

    fn scale(&self, c: Fp) -> Self {
        *self * c
    }

    fn add_public(&self, c: Fp) -> Self {
        *self + c
    }
}

pub(crate) fn vadd<T: Linear>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.add(y)).collect()
}

pub(crate) fn vsub<T: Linear>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.sub(y)).collect()
}
