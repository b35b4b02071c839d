use std::collections::BTreeSet;

use rand::Rng;

use crate::field::{Fp, PrimeModulus};

use super::{Linear, MpcError};

/// A tagged share held by a party.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Auth {
    pub value: Fp,
    pub tag: Fp,
}

/// The federator's mirror of a tagged share: a valid pair satisfies
/// `tag = alpha * (value - offset) + beta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Key {
    pub beta: Fp,
    pub offset: Fp,
}

impl Linear for Auth {
    fn add(&self, o: &Self) -> Self {
        Auth {
            value: self.value + o.value,
            tag: self.tag + o.tag,
        }
    }

    fn sub(&self, o: &Self) -> Self {
        Auth {
            value: self.value - o.value,
            tag: self.tag - o.tag,
        }
    }

    fn scale(&self, c: Fp) -> Self {
        Auth {
            value: self.value * c,
            tag: self.tag * c,
        }
    }

    fn add_public(&self, c: Fp) -> Self {
        Auth {
            value: self.value + c,
            tag: self.tag,
        }
    }
}

impl Linear for Key {
    fn add(&self, o: &Self) -> Self {
        Key {
            beta: self.beta + o.beta,
            offset: self.offset + o.offset,
        }
    }

    fn sub(&self, o: &Self) -> Self {
        Key {
            beta: self.beta - o.beta,
            offset: self.offset - o.offset,
        }
    }

    fn scale(&self, c: Fp) -> Self {
        Key {
            beta: self.beta * c,
            offset: self.offset * c,
        }
    }

    fn add_public(&self, c: Fp) -> Self {
        Key {
            beta: self.beta,
            offset: self.offset + c,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MacKey {
    pub id: u64,
    pub alpha: Fp,
    pub beta: Fp,
}

/// `alpha * value + beta`.
pub fn mac_tag(value: Fp, key: &MacKey) -> Fp {
    key.alpha * value + key.beta
}

pub fn mac_check(share: &Auth, key: &Key, alpha: Fp) -> bool {
    share.tag == alpha * (share.value - key.offset) + key.beta
}

/// Accepts iff `combined_tag = alpha (claimed - c) + sum a_i beta_i`, the
/// image of the individual tags under `y = sum a_i s_i + c`.
pub fn mac_check_linear(
    claimed: Fp,
    combined_tag: Fp,
    coefficients: &[Fp],
    betas: &[Fp],
    c: Fp,
    alpha: Fp,
) -> bool {
    let beta: Fp = coefficients
        .iter()
        .zip(betas)
        .fold(Fp::zero(alpha.modulus()), |acc, (&a, &b)| acc + a * b);
    combined_tag == alpha * (claimed - c) + beta
}

/// Issues one-time keys under a fixed nonzero `alpha` and refuses to tag
/// twice with the same key.
#[derive(Clone, Debug)]
pub struct MacAuthority {
    alpha: Fp,
    next_id: u64,
    used: BTreeSet<u64>,
}

impl MacAuthority {
    pub fn new<R: Rng + ?Sized>(modulus: PrimeModulus, rng: &mut R) -> Self {
        Self::with_alpha(Fp::random_nonzero(modulus, rng))
    }

    pub fn with_alpha(alpha: Fp) -> Self {
        assert!(!alpha.is_zero(), "MAC alpha must be nonzero");
        Self {
            alpha,
            next_id: 0,
            used: BTreeSet::new(),
        }
    }

    pub fn alpha(&self) -> Fp {
        self.alpha
    }

    pub fn issue<R: Rng + ?Sized>(&mut self, rng: &mut R) -> MacKey {
        let id = self.next_id;
        self.next_id += 1;
        MacKey {
            id,
            alpha: self.alpha,
            beta: Fp::random(self.alpha.modulus(), rng),
        }
    }

    pub fn tag(&mut self, value: Fp, key: &MacKey) -> Result<Fp, MpcError> {
        if !self.used.insert(key.id) {
            return Err(MpcError::KeyReused { id: key.id });
        }
        Ok(mac_tag(value, key))
    }

    /// Fresh key, tag and federator mirror for one share value.
    pub fn authenticate<R: Rng + ?Sized>(&mut self, value: Fp, rng: &mut R) -> (Auth, Key) {
        let key = self.issue(rng);
        let tag = self.tag(value, &key).expect("fresh key");
        (
            Auth { value, tag },
            Key {
                beta: key.beta,
                offset: Fp::zero(value.modulus()),
            },
        )
    }
}
