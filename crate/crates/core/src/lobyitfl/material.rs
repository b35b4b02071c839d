//! Correlated randomness dealt by the trusted initializer, its one-time
//! consumption interface and the binary session file.

use std::io::{self, Read, Write};

use rand::Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::field::{Fp, PrimeModulus};
use crate::mpc::{
    share_authenticated, share_authenticated_vector, ttp_generate_triples, Auth, Dealt, DotTriple,
    Key, MacAuthority, MpcError, ScalarTriple, ScalarVectorTriple, TripleBatch, TripleBudget,
    TripleKind,
};
use crate::params::ProtocolParams;
use crate::sharing::EvaluationDomain;

pub const SESSION_MAGIC: &[u8; 8] = b"ITFLSESS";
pub const SESSION_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("session file i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a session file")]
    BadMagic,
    #[error("session format version {found} is not supported (expected {SESSION_VERSION})")]
    Version { found: u8 },
    #[error("session was initialized for a different configuration")]
    ConfigMismatch,
    #[error("session file is corrupt: {0}")]
    Corrupt(&'static str),
    #[error("insufficient provisioned iterations: {provisioned} provisioned")]
    Exhausted { provisioned: usize },
}

/// Items dealt to every party with the federator's key mirrors; each item
/// index may be claimed once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provision<A, K> {
    /// `parties[i][k]`: party `i`'s share of item `k`.
    pub parties: Vec<Vec<A>>,
    /// `ledger[i][k]`: the federator's key for `parties[i][k]`.
    pub ledger: Vec<Vec<K>>,
    used: Vec<bool>,
}

impl<A, K> Provision<A, K> {
    pub fn new(parties: Vec<Vec<A>>, ledger: Vec<Vec<K>>) -> Self {
        let len = parties.first().map_or(0, |p| p.len());
        Self {
            parties,
            ledger,
            used: vec![false; len],
        }
    }

    pub fn len(&self) -> usize {
        self.used.len()
    }

    pub fn is_empty(&self) -> bool {
        self.used.is_empty()
    }

    pub fn consumed(&self) -> usize {
        self.used.iter().filter(|&&u| u).count()
    }

    pub fn is_used(&self, index: usize) -> bool {
        self.used.get(index).copied().unwrap_or(false)
    }

    /// Marks item `index` consumed.
    pub fn claim(&mut self, index: usize) -> Result<(), MpcError> {
        match self.used.get_mut(index) {
            None => Err(MpcError::Exhausted {
                used: self.used.len(),
            }),
            Some(true) => Err(MpcError::TripleReused { index }),
            Some(flag) => {
                *flag = true;
                Ok(())
            }
        }
    }

    /// Drops items beyond `len` (test fixture for exhaustion).
    pub fn truncate(&mut self, len: usize) {
        self.used.truncate(len);
        for p in &mut self.parties {
            p.truncate(len);
        }
        for l in &mut self.ledger {
            l.truncate(len);
        }
    }
}

impl<A, K> From<Dealt<A, K>> for Provision<A, K> {
    fn from(d: Dealt<A, K>) -> Self {
        Self::new(
            d.parties.into_iter().map(|p| p.into_items()).collect(),
            d.ledger.into_iter().map(|p| p.into_items()).collect(),
        )
    }
}

/// Everything one low-cost iteration consumes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IterationMaterial {
    /// Global MAC key, known to the federator only.
    pub alpha: Fp,
    /// Simulation-side value of the shared `lambda`.
    pub lambda_value: Fp,
    /// `pads[j]`: user `j`'s one-time pad `r_j`.
    pub pads: Vec<Vec<Fp>>,
    /// Item `j` is the tagged sharing of `r_j`.
    pub pad_shares: Provision<Vec<Auth>, Vec<Key>>,
    pub lambda: Provision<Auth, Key>,
    pub dot: Provision<DotTriple<Auth>, DotTriple<Key>>,
    pub scalar: Provision<ScalarTriple<Auth>, ScalarTriple<Key>>,
    pub scalar_vector: Provision<ScalarVectorTriple<Auth>, ScalarVectorTriple<Key>>,
}

impl IterationMaterial {
    /// Samples one iteration's budget for `params` (with `m = 1`).
    pub fn generate<R: Rng + ?Sized>(
        params: &ProtocolParams,
        domain: &EvaluationDomain,
        rng: &mut R,
    ) -> Self {
        let modulus = params.modulus;
        let (n, t, d) = (params.n, params.t, params.padded_dim());
        let sp = params.sharing();
        let budget = TripleBudget::per_iteration(n, params.tau);
        let mut authority = MacAuthority::new(modulus, rng);

        let pads: Vec<Vec<Fp>> = (0..budget.random_vectors)
            .map(|_| (0..d).map(|_| Fp::random(modulus, rng)).collect())
            .collect();
        let mut pad_parties = vec![Vec::with_capacity(n); n];
        let mut pad_ledger = vec![Vec::with_capacity(n); n];
        for r in &pads {
            let (a, k) = share_authenticated_vector(r, domain, t, &mut authority, rng);
            for (i, (ai, ki)) in a.into_iter().zip(k).enumerate() {
                pad_parties[i].push(ai);
                pad_ledger[i].push(ki);
            }
        }

        let lambda_value = Fp::random_nonzero(modulus, rng);
        let (la, lk) = share_authenticated(lambda_value, domain, t, &mut authority, rng);
        let lambda = Provision::new(
            la.into_iter().map(|a| vec![a]).collect(),
            lk.into_iter().map(|k| vec![k]).collect(),
        );

        let mut batch = |kind, count, len| {
            ttp_generate_triples(kind, count, len, sp, domain, &mut authority, rng)
        };
        let TripleBatch::Dot(dot) = batch(TripleKind::Dot, budget.dot, d) else {
            unreachable!()
        };
        let TripleBatch::Scalar(scalar) = batch(TripleKind::Scalar, budget.scalar, 0) else {
            unreachable!()
        };
        let TripleBatch::ScalarVector(sv) =
            batch(TripleKind::ScalarVector, budget.scalar_vector, d)
        else {
            unreachable!()
        };
        Self {
            alpha: authority.alpha(),
            lambda_value,
            pads,
            pad_shares: Provision::new(pad_parties, pad_ledger),
            lambda,
            dot: dot.into(),
            scalar: scalar.into(),
            scalar_vector: sv.into(),
        }
    }

    pub fn provisioned(&self) -> TripleBudget {
        TripleBudget {
            dot: self.dot.len(),
            scalar: self.scalar.len(),
            scalar_vector: self.scalar_vector.len(),
            random_vectors: self.pad_shares.len(),
            lambda: self.lambda.len(),
        }
    }

    pub fn consumed(&self) -> TripleBudget {
        TripleBudget {
            dot: self.dot.consumed(),
            scalar: self.scalar.consumed(),
            scalar_vector: self.scalar_vector.consumed(),
            random_vectors: self.pad_shares.consumed(),
            lambda: self.lambda.consumed(),
        }
    }
}

/// Material for a whole session, handed out one iteration at a time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionMaterial {
    blocks: Vec<IterationMaterial>,
    next: usize,
}

impl SessionMaterial {
    pub fn new(blocks: Vec<IterationMaterial>) -> Self {
        Self { blocks, next: 0 }
    }

    pub fn iterations(&self) -> usize {
        self.blocks.len()
    }

    pub fn remaining(&self) -> usize {
        self.blocks.len() - self.next
    }

    pub fn blocks(&self) -> &[IterationMaterial] {
        &self.blocks
    }

    /// Sum of all provisioned budgets.
    pub fn provisioned(&self) -> TripleBudget {
        let zero = TripleBudget {
            dot: 0,
            scalar: 0,
            scalar_vector: 0,
            random_vectors: 0,
            lambda: 0,
        };
        self.blocks.iter().fold(zero, |acc, b| {
            let p = b.provisioned();
            TripleBudget {
                dot: acc.dot + p.dot,
                scalar: acc.scalar + p.scalar,
                scalar_vector: acc.scalar_vector + p.scalar_vector,
                random_vectors: acc.random_vectors + p.random_vectors,
                lambda: acc.lambda + p.lambda,
            }
        })
    }

    /// The next iteration's material.
    pub fn next_iteration(&mut self) -> Result<&mut IterationMaterial, MaterialError> {
        if self.next >= self.blocks.len() {
            return Err(MaterialError::Exhausted {
                provisioned: self.blocks.len(),
            });
        }
        self.next += 1;
        Ok(&mut self.blocks[self.next - 1])
    }
}

/// Provisions `iterations` budgets.
pub fn ttp_initialize<R: Rng + ?Sized>(
    params: &ProtocolParams,
    domain: &EvaluationDomain,
    iterations: usize,
    rng: &mut R,
) -> SessionMaterial {
    SessionMaterial::new(
        (0..iterations)
            .map(|_| IterationMaterial::generate(params, domain, rng))
            .collect(),
    )
}

/// SHA-256 of the canonical JSON form of the parameters.
pub fn config_hash(params: &ProtocolParams) -> [u8; 32] {
    let json = serde_json::to_vec(params).expect("parameters serialize");
    Sha256::digest(&json).into()
}

trait Wire: Sized {
    fn put(&self, out: &mut Vec<u8>);
    fn get(r: &mut Cursor<'_>) -> Result<Self, MaterialError>;
}

struct Cursor<'a> {
    buf: &'a [u8],
    modulus: PrimeModulus,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], MaterialError> {
        if self.buf.len() < n {
            return Err(MaterialError::Corrupt("truncated block"));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<usize, MaterialError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

impl Wire for Fp {
    fn put(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.value().to_le_bytes());
    }
    fn get(r: &mut Cursor<'_>) -> Result<Self, MaterialError> {
        let v = u128::from_le_bytes(r.take(16)?.try_into().expect("16 bytes"));
        if v >= r.modulus.value() {
            return Err(MaterialError::Corrupt("element out of range"));
        }
        Ok(Fp::new(v, r.modulus))
    }
}

impl Wire for Auth {
    fn put(&self, out: &mut Vec<u8>) {
        self.value.put(out);
        self.tag.put(out);
    }
    fn get(r: &mut Cursor<'_>) -> Result<Self, MaterialError> {
        Ok(Auth {
            value: Fp::get(r)?,
            tag: Fp::get(r)?,
        })
    }
}

impl Wire for Key {
    fn put(&self, out: &mut Vec<u8>) {
        self.beta.put(out);
        self.offset.put(out);
    }
    fn get(r: &mut Cursor<'_>) -> Result<Self, MaterialError> {
        Ok(Key {
            beta: Fp::get(r)?,
            offset: Fp::get(r)?,
        })
    }
}

impl<T: Wire> Wire for Vec<T> {
    fn put(&self, out: &mut Vec<u8>) {
        put_u32(out, self.len());
        self.iter().for_each(|x| x.put(out));
    }
    fn get(r: &mut Cursor<'_>) -> Result<Self, MaterialError> {
        let len = r.u32()?;
        if len > r.buf.len() {
            return Err(MaterialError::Corrupt("length prefix exceeds block"));
        }
        (0..len).map(|_| T::get(r)).collect()
    }
}

impl<T: Wire> Wire for ScalarTriple<T> {
    fn put(&self, out: &mut Vec<u8>) {
        self.gamma.put(out);
        self.omega.put(out);
        self.kappa.put(out);
    }
    fn get(r: &mut Cursor<'_>) -> Result<Self, MaterialError> {
        Ok(ScalarTriple {
            gamma: T::get(r)?,
            omega: T::get(r)?,
            kappa: T::get(r)?,
        })
    }
}

impl<T: Wire> Wire for DotTriple<T> {
    fn put(&self, out: &mut Vec<u8>) {
        self.iota.put(out);
        self.phi.put(out);
        self.chi.put(out);
    }
    fn get(r: &mut Cursor<'_>) -> Result<Self, MaterialError> {
        Ok(DotTriple {
            iota: Vec::get(r)?,
            phi: Vec::get(r)?,
            chi: T::get(r)?,
        })
    }
}

impl<T: Wire> Wire for ScalarVectorTriple<T> {
    fn put(&self, out: &mut Vec<u8>) {
        self.zeta.put(out);
        self.xi.put(out);
        self.psi.put(out);
    }
    fn get(r: &mut Cursor<'_>) -> Result<Self, MaterialError> {
        Ok(ScalarVectorTriple {
            zeta: T::get(r)?,
            xi: Vec::get(r)?,
            psi: Vec::get(r)?,
        })
    }
}

impl<A: Wire, K: Wire> Wire for Provision<A, K> {
    fn put(&self, out: &mut Vec<u8>) {
        self.parties.put(out);
        self.ledger.put(out);
        put_u32(out, self.used.len());
        out.extend(self.used.iter().map(|&u| u as u8));
    }
    fn get(r: &mut Cursor<'_>) -> Result<Self, MaterialError> {
        let parties: Vec<Vec<A>> = Vec::get(r)?;
        let ledger: Vec<Vec<K>> = Vec::get(r)?;
        let len = r.u32()?;
        let used = r.take(len)?.iter().map(|&b| b != 0).collect::<Vec<_>>();
        if parties.len() != ledger.len()
            || parties.iter().any(|p| p.len() != len)
            || ledger.iter().any(|l| l.len() != len)
        {
            return Err(MaterialError::Corrupt("inconsistent provision"));
        }
        Ok(Provision {
            parties,
            ledger,
            used,
        })
    }
}

impl Wire for IterationMaterial {
    fn put(&self, out: &mut Vec<u8>) {
        self.alpha.put(out);
        self.lambda_value.put(out);
        self.pads.put(out);
        self.pad_shares.put(out);
        self.lambda.put(out);
        self.dot.put(out);
        self.scalar.put(out);
        self.scalar_vector.put(out);
    }
    fn get(r: &mut Cursor<'_>) -> Result<Self, MaterialError> {
        Ok(IterationMaterial {
            alpha: Fp::get(r)?,
            lambda_value: Fp::get(r)?,
            pads: Vec::get(r)?,
            pad_shares: Provision::get(r)?,
            lambda: Provision::get(r)?,
            dot: Provision::get(r)?,
            scalar: Provision::get(r)?,
            scalar_vector: Provision::get(r)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SessionHeader {
    pub config_hash: [u8; 32],
    pub modulus: PrimeModulus,
    pub iterations: u64,
}

/// Streams a session file: header, then one length-prefixed block per
/// iteration.
pub struct SessionWriter<W: Write> {
    inner: W,
    remaining: u64,
}

impl<W: Write> SessionWriter<W> {
    pub fn create(mut inner: W, header: SessionHeader) -> Result<Self, MaterialError> {
        inner.write_all(SESSION_MAGIC)?;
        inner.write_all(&[SESSION_VERSION])?;
        inner.write_all(&header.config_hash)?;
        inner.write_all(&header.modulus.value().to_le_bytes())?;
        inner.write_all(&header.iterations.to_le_bytes())?;
        Ok(Self {
            inner,
            remaining: header.iterations,
        })
    }

    pub fn write_block(&mut self, block: &IterationMaterial) -> Result<(), MaterialError> {
        if self.remaining == 0 {
            return Err(MaterialError::Corrupt("more blocks than declared"));
        }
        let mut buf = Vec::new();
        block.put(&mut buf);
        self.inner.write_all(&(buf.len() as u64).to_le_bytes())?;
        self.inner.write_all(&buf)?;
        self.remaining -= 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, MaterialError> {
        if self.remaining != 0 {
            return Err(MaterialError::Corrupt("fewer blocks than declared"));
        }
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub struct SessionReader<R: Read> {
    inner: R,
    header: SessionHeader,
    read: u64,
}

impl<R: Read> SessionReader<R> {
    pub fn open(mut inner: R) -> Result<Self, MaterialError> {
        let mut magic = [0u8; 8];
        inner
            .read_exact(&mut magic)
            .map_err(|_| MaterialError::BadMagic)?;
        if &magic != SESSION_MAGIC {
            return Err(MaterialError::BadMagic);
        }
        let mut version = [0u8; 1];
        inner.read_exact(&mut version)?;
        if version[0] != SESSION_VERSION {
            return Err(MaterialError::Version { found: version[0] });
        }
        let mut config_hash = [0u8; 32];
        inner.read_exact(&mut config_hash)?;
        let mut p = [0u8; 16];
        inner.read_exact(&mut p)?;
        let modulus = PrimeModulus::new(u128::from_le_bytes(p))
            .map_err(|_| MaterialError::Corrupt("modulus"))?;
        let mut it = [0u8; 8];
        inner.read_exact(&mut it)?;
        Ok(Self {
            inner,
            header: SessionHeader {
                config_hash,
                modulus,
                iterations: u64::from_le_bytes(it),
            },
            read: 0,
        })
    }

    pub fn header(&self) -> &SessionHeader {
        &self.header
    }

    /// Fails with [`MaterialError::ConfigMismatch`] unless the file was made
    /// for `params`.
    pub fn check(&self, params: &ProtocolParams) -> Result<(), MaterialError> {
        if self.header.config_hash != config_hash(params) || self.header.modulus != params.modulus {
            return Err(MaterialError::ConfigMismatch);
        }
        Ok(())
    }

    /// The next block, or exhaustion once all declared blocks were read.
    pub fn next_block(&mut self) -> Result<IterationMaterial, MaterialError> {
        if self.read >= self.header.iterations {
            return Err(MaterialError::Exhausted {
                provisioned: self.header.iterations as usize,
            });
        }
        let mut len = [0u8; 8];
        self.inner.read_exact(&mut len)?;
        let len = u64::from_le_bytes(len) as usize;
        let mut buf = vec![0u8; len];
        self.inner.read_exact(&mut buf)?;
        let mut cur = Cursor {
            buf: &buf,
            modulus: self.header.modulus,
        };
        let block = IterationMaterial::get(&mut cur)?;
        if !cur.buf.is_empty() {
            return Err(MaterialError::Corrupt("trailing bytes in block"));
        }
        self.read += 1;
        Ok(block)
    }
}
