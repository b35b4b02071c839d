use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::ChaCha20Rng;

use crate::adversary::{Misbehavior, Roles};
use crate::discriminator::DiscriminatorPoly;
use crate::field::{centered_lift, FieldVector, Fp};
use crate::mpc::{
    dot_finish, dot_open, mac_check, mul_finish, mul_open, scale_finish, scale_open, vadd, Auth,
    Key, Linear, MpcError, TripleBudget,
};
use crate::params::ProtocolParams;
use crate::protocol::{
    aggregate, norm_passes, quantize_inputs, Exclusion, IterationContext, IterationOutcome,
    ProtocolError, QuantizedInputs, Stage,
};
use crate::quantize::RealUpdate;
use crate::rng::{Purpose, FEDERATOR};
use crate::sharing::{lagrange_weights, EvaluationDomain};
use crate::transcript::{Endpoint, MessageKind, Transcript};
use crate::Real;

use super::{IterationMaterial, LobyitflConfig};

#[derive(Clone, Debug)]
pub struct Lobyitfl<T> {
    params: ProtocolParams,
    domain: EvaluationDomain,
    poly: DiscriminatorPoly<T>,
}

/// One party's message in an opening round with the federator's mirror.
struct Sent {
    party: usize,
    shares: Vec<Auth>,
    keys: Vec<Key>,
}

/// `sum_k c_k a_k` for public `c`.
fn combine<T: Linear>(a: &[T], c: &[Fp]) -> T {
    a.iter()
        .zip(c)
        .skip(1)
        .fold(a[0].scale(c[0]), |acc, (x, &ck)| acc.add(&x.scale(ck)))
}

/// `c_0 + sum_{k >= 1} c_k P_k` from the powers `P_1..P_tau`.
fn discriminate<T: Linear>(powers: &[T], coeffs: &[Fp]) -> T {
    combine(powers, &coeffs[1..]).add_public(coeffs[0])
}

fn sum<T: Linear>(xs: impl IntoIterator<Item = T>) -> Option<T> {
    xs.into_iter().reduce(|a, b| a.add(&b))
}

fn claim_budget(m: &mut IterationMaterial, b: &TripleBudget) -> Result<(), MpcError> {
    (0..b.random_vectors).try_for_each(|k| m.pad_shares.claim(k))?;
    (0..b.lambda).try_for_each(|k| m.lambda.claim(k))?;
    (0..b.dot).try_for_each(|k| m.dot.claim(k))?;
    (0..b.scalar).try_for_each(|k| m.scalar.claim(k))?;
    (0..b.scalar_vector).try_for_each(|k| m.scalar_vector.claim(k))
}

impl<T: Real> Lobyitfl<T> {
    pub fn new(cfg: LobyitflConfig) -> Result<Self, ProtocolError> {
        Self::new_unchecked(cfg.params().clone())
    }

    /// Skips the resilience check (used to exercise the threshold).
    pub fn new_unchecked(params: ProtocolParams) -> Result<Self, ProtocolError> {
        let domain = EvaluationDomain::standard(params.modulus, params.sharing())?;
        let poly = params.poly()?;
        Ok(Self {
            params,
            domain,
            poly,
        })
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn domain(&self) -> &EvaluationDomain {
        &self.domain
    }

    pub fn poly(&self) -> &DiscriminatorPoly<T> {
        &self.poly
    }

    /// One iteration's material from the initializer's stream.
    pub fn generate_material(&self, ctx: IterationContext) -> IterationMaterial {
        IterationMaterial::generate(
            &self.params,
            &self.domain,
            &mut ctx.rng(FEDERATOR, Purpose::Ttp),
        )
    }

    pub fn run_iteration(
        &self,
        ctx: IterationContext,
        updates: &[RealUpdate<T>],
        u0: &RealUpdate<T>,
        roles: &Roles,
        material: &mut IterationMaterial,
        transcript: &mut Transcript,
    ) -> Result<IterationOutcome<T>, ProtocolError> {
        let inputs = quantize_inputs(&self.params, ctx, updates, u0, roles)?;
        self.run_quantized(ctx, inputs, u0, roles, material, transcript)
    }

    /// MAC-checks every message, flags senders with any failing entry and
    /// opens each position from the first `t + 1` accepted senders.
    #[allow(clippy::too_many_arguments)]
    fn open_round(
        &self,
        tr: &mut Transcript,
        kind: MessageKind,
        sent: Vec<Sent>,
        alpha: Fp,
        flagged: &mut BTreeSet<usize>,
        stage: Stage,
    ) -> Result<Vec<Fp>, ProtocolError> {
        let t = self.params.t;
        let mut accepted = Vec::new();
        for s in &sent {
            tr.send(
                Endpoint::User(s.party),
                Endpoint::Federator,
                kind,
                2 * s.shares.len(),
                || s.shares.iter().flat_map(|a| [a.value, a.tag]).collect(),
            );
            if flagged.contains(&s.party) {
                continue;
            }
            if s.shares
                .iter()
                .zip(&s.keys)
                .all(|(a, k)| mac_check(a, k, alpha))
            {
                accepted.push(s);
            } else {
                flagged.insert(s.party);
            }
        }
        if accepted.len() < t + 1 {
            return Err(ProtocolError::IterationFailed { stage });
        }
        let used = &accepted[..t + 1];
        let points: Vec<Fp> = used.iter().map(|s| self.domain.alphas()[s.party]).collect();
        let w = lagrange_weights(&points, self.domain.secret_anchors()[0])?;
        let len = used[0].shares.len();
        Ok((0..len)
            .map(|k| {
                used.iter()
                    .zip(&w)
                    .map(|(s, &wi)| s.shares[k].value * wi)
                    .sum()
            })
            .collect())
    }

    fn announce(&self, tr: &mut Transcript, present: &[usize], opened: &[Fp]) {
        for &i in present {
            tr.send(
                Endpoint::Federator,
                Endpoint::User(i),
                MessageKind::BeaverAnnounce,
                opened.len(),
                || opened.to_vec(),
            );
        }
    }

    /// The protocol on already quantized inputs, consuming one iteration of
    /// material.
    pub fn run_quantized(
        &self,
        ctx: IterationContext,
        inputs: QuantizedInputs,
        u0: &RealUpdate<T>,
        roles: &Roles,
        material: &mut IterationMaterial,
        tr: &mut Transcript,
    ) -> Result<IterationOutcome<T>, ProtocolError> {
        let p = &self.params;
        let (n, tau) = (p.n, p.tau);
        let modulus = p.modulus;
        let d = p.padded_dim();
        let budget = TripleBudget::per_iteration(n, tau);
        if material.pad_shares.parties.len() != n {
            return Err(MpcError::LengthMismatch {
                expected: n,
                actual: material.pad_shares.parties.len(),
            }
            .into());
        }
        claim_budget(material, &budget)?;
        let mat = &*material;
        let alpha = mat.alpha;

        let present: Vec<usize> = (0..n).filter(|&j| roles.present(j)).collect();
        let responders: Vec<usize> = present
            .iter()
            .copied()
            .filter(|&j| roles.responds(j))
            .collect();
        let owners: Vec<usize> = present
            .iter()
            .copied()
            .filter(|&j| inputs.users[j].is_some())
            .collect();
        let mut excluded: BTreeMap<usize, Exclusion> = (0..n)
            .filter(|j| !owners.contains(j))
            .map(|j| (j, Exclusion::Absent))
            .collect();
        let mut flagged = BTreeSet::new();
        let mut adv: BTreeMap<usize, ChaCha20Rng> = present
            .iter()
            .map(|&j| (j, ctx.rng(j as u64, Purpose::Adversary)))
            .collect();

        for &i in &present {
            tr.send(
                Endpoint::Federator,
                Endpoint::User(i),
                MessageKind::RootBroadcast,
                d,
                || inputs.root.values.to_vec(),
            );
        }

        // One-time-pad sharing: b_j = u_j - r_j is public, shares of u_j are
        // shares of r_j shifted by b_j.
        let mut held: Vec<BTreeMap<usize, Vec<Auth>>> = vec![BTreeMap::new(); n];
        let mut mirror: Vec<BTreeMap<usize, Vec<Key>>> = vec![BTreeMap::new(); n];
        for &j in &owners {
            let u = &inputs.users[j].as_ref().expect("owner has input").values;
            let b: Vec<Fp> = u.iter().zip(&mat.pads[j]).map(|(&x, &r)| x - r).collect();
            tr.send(
                Endpoint::User(j),
                Endpoint::Federator,
                MessageKind::PadBroadcast,
                d,
                || b.clone(),
            );
            for &i in &present {
                tr.send(
                    Endpoint::Federator,
                    Endpoint::User(i),
                    MessageKind::PadBroadcast,
                    d,
                    || b.clone(),
                );
                let a = mat.pad_shares.parties[i][j]
                    .iter()
                    .zip(&b)
                    .map(|(s, &c)| s.add_public(c));
                held[i].insert(j, a.collect());
                let k = mat.pad_shares.ledger[i][j]
                    .iter()
                    .zip(&b)
                    .map(|(s, &c)| s.add_public(c));
                mirror[i].insert(j, k.collect());
            }
        }
        for &i in &present {
            if roles.misbehavior[i] == Some(Misbehavior::InvalidSharing) {
                for share in held[i].values_mut() {
                    share[0].value += Fp::one(modulus);
                }
            }
        }

        let corrupt =
            |i: usize, late: bool, mut v: Vec<Auth>, adv: &mut BTreeMap<usize, ChaCha20Rng>| {
                let rng = adv.get_mut(&i).expect("present");
                match roles.misbehavior[i] {
                    Some(Misbehavior::CorruptMac) => {
                        v.iter_mut().for_each(|a| a.tag = Fp::random(modulus, rng))
                    }
                    Some(Misbehavior::CorruptSigmaShares) if late => v
                        .iter_mut()
                        .for_each(|a| a.value = Fp::random(modulus, rng)),
                    _ => {}
                }
                v
            };

        // Norm validation: one dot-product triple per owner.
        let mut norm_a: Vec<BTreeMap<usize, Auth>> = vec![BTreeMap::new(); n];
        let mut norm_k: Vec<BTreeMap<usize, Key>> = vec![BTreeMap::new(); n];
        if !owners.is_empty() {
            let masked = |i: usize| {
                let (mut sa, mut sk) = (Vec::new(), Vec::new());
                for &j in &owners {
                    let (e, dl) = dot_open(&held[i][&j], &held[i][&j], &mat.dot.parties[i][j]);
                    let (ek, dk) = dot_open(&mirror[i][&j], &mirror[i][&j], &mat.dot.ledger[i][j]);
                    sa.extend(e.into_iter().chain(dl));
                    sk.extend(ek.into_iter().chain(dk));
                }
                (sa, sk)
            };
            let sent = responders
                .iter()
                .map(|&i| {
                    let (sa, sk) = masked(i);
                    Sent {
                        party: i,
                        shares: corrupt(i, false, sa, &mut adv),
                        keys: sk,
                    }
                })
                .collect();
            let opened = self.open_round(
                tr,
                MessageKind::BeaverOpen,
                sent,
                alpha,
                &mut flagged,
                Stage::BeaverOpen,
            )?;
            self.announce(tr, &present, &opened);
            for (c, &j) in owners.iter().enumerate() {
                let block = &opened[2 * d * c..2 * d * (c + 1)];
                let (eps, delta) = block.split_at(d);
                for &i in &present {
                    norm_a[i].insert(j, dot_finish(&mat.dot.parties[i][j], eps, delta));
                    norm_k[i].insert(j, dot_finish(&mat.dot.ledger[i][j], eps, delta));
                }
            }
        }
        let sent = responders
            .iter()
            .filter(|_| !owners.is_empty())
            .map(|&i| Sent {
                party: i,
                shares: corrupt(
                    i,
                    false,
                    owners.iter().map(|j| norm_a[i][j]).collect(),
                    &mut adv,
                ),
                keys: owners.iter().map(|j| norm_k[i][j]).collect(),
            })
            .collect::<Vec<_>>();
        let mut included = Vec::new();
        if !owners.is_empty() {
            let norms = self.open_round(
                tr,
                MessageKind::NormShare,
                sent,
                alpha,
                &mut flagged,
                Stage::NormOpen,
            )?;
            for (&j, &v) in owners.iter().zip(&norms) {
                if norm_passes(centered_lift(v), p.q, p.epsilon) {
                    included.push(j);
                } else {
                    excluded.insert(j, Exclusion::NormCheck);
                }
            }
            for &i in &present {
                tr.send(
                    Endpoint::Federator,
                    Endpoint::User(i),
                    MessageKind::Verdict,
                    owners.len(),
                    || {
                        owners
                            .iter()
                            .map(|j| Fp::new(included.contains(j) as u128, modulus))
                            .collect()
                    },
                );
            }
        }

        let zero = Fp::zero(modulus);
        if included.is_empty() {
            return Ok(IterationOutcome {
                update: vec![T::zero(); p.d],
                nu: vec![T::zero(); p.d],
                degenerate: true,
                included,
                excluded,
                flagged,
                lambda: mat.lambda_value,
                lambda_sigma1: zero,
                lambda_sigma2: FieldVector::zeros(modulus, d),
                lambda_attempts: 0,
                inputs,
            });
        }

        // Powers of X_j = <u_0, u_j>, one scalar triple per power.
        let root = inputs.root.values.as_slice();
        let mut pow_a: Vec<BTreeMap<usize, Vec<Auth>>> = vec![BTreeMap::new(); n];
        let mut pow_k: Vec<BTreeMap<usize, Vec<Key>>> = vec![BTreeMap::new(); n];
        for &i in &present {
            for &j in &included {
                pow_a[i].insert(j, vec![combine(&held[i][&j], root)]);
                pow_k[i].insert(j, vec![combine(&mirror[i][&j], root)]);
            }
        }
        let scalar_at = |j: usize, k: usize| j * (tau - 1) + (k - 2);
        for k in 2..=tau {
            let sent = responders
                .iter()
                .map(|&i| {
                    let (mut sa, mut sk) = (Vec::new(), Vec::new());
                    for &j in &included {
                        let s = scalar_at(j, k);
                        let (e, dl) = mul_open(
                            &pow_a[i][&j][k - 2],
                            &pow_a[i][&j][0],
                            &mat.scalar.parties[i][s],
                        );
                        let (ek, dk) = mul_open(
                            &pow_k[i][&j][k - 2],
                            &pow_k[i][&j][0],
                            &mat.scalar.ledger[i][s],
                        );
                        sa.extend([e, dl]);
                        sk.extend([ek, dk]);
                    }
                    Sent {
                        party: i,
                        shares: corrupt(i, true, sa, &mut adv),
                        keys: sk,
                    }
                })
                .collect();
            let opened = self.open_round(
                tr,
                MessageKind::BeaverOpen,
                sent,
                alpha,
                &mut flagged,
                Stage::BeaverOpen,
            )?;
            self.announce(tr, &present, &opened);
            for (c, &j) in included.iter().enumerate() {
                let (eps, delta) = (opened[2 * c], opened[2 * c + 1]);
                let s = scalar_at(j, k);
                for &i in &present {
                    let a = mul_finish(&mat.scalar.parties[i][s], eps, delta);
                    pow_a[i].get_mut(&j).expect("included").push(a);
                    let kk = mul_finish(&mat.scalar.ledger[i][s], eps, delta);
                    pow_k[i].get_mut(&j).expect("included").push(kk);
                }
            }
        }

        // Trust scores, then H_j u_j with one scalar-vector triple each.
        let coeffs = self.poly.field_coeffs();
        let h_a: Vec<BTreeMap<usize, Auth>> = pow_a
            .iter()
            .map(|m| {
                m.iter()
                    .map(|(&j, ps)| (j, discriminate(ps, coeffs)))
                    .collect()
            })
            .collect();
        let h_k: Vec<BTreeMap<usize, Key>> = pow_k
            .iter()
            .map(|m| {
                m.iter()
                    .map(|(&j, ps)| (j, discriminate(ps, coeffs)))
                    .collect()
            })
            .collect();
        let sent = responders
            .iter()
            .map(|&i| {
                let (mut sa, mut sk) = (Vec::new(), Vec::new());
                for &j in &included {
                    let (e, dl) =
                        scale_open(&h_a[i][&j], &held[i][&j], &mat.scalar_vector.parties[i][j]);
                    let (ek, dk) =
                        scale_open(&h_k[i][&j], &mirror[i][&j], &mat.scalar_vector.ledger[i][j]);
                    sa.extend(std::iter::once(e).chain(dl));
                    sk.extend(std::iter::once(ek).chain(dk));
                }
                Sent {
                    party: i,
                    shares: corrupt(i, true, sa, &mut adv),
                    keys: sk,
                }
            })
            .collect();
        let opened = self.open_round(
            tr,
            MessageKind::BeaverOpen,
            sent,
            alpha,
            &mut flagged,
            Stage::BeaverOpen,
        )?;
        self.announce(tr, &present, &opened);
        let mut s1_a: BTreeMap<usize, Auth> = BTreeMap::new();
        let mut s1_k: BTreeMap<usize, Key> = BTreeMap::new();
        let mut s2_a: BTreeMap<usize, Vec<Auth>> = BTreeMap::new();
        let mut s2_k: BTreeMap<usize, Vec<Key>> = BTreeMap::new();
        for &i in &present {
            s1_a.insert(
                i,
                sum(included.iter().map(|j| h_a[i][j])).expect("nonempty"),
            );
            s1_k.insert(
                i,
                sum(included.iter().map(|j| h_k[i][j])).expect("nonempty"),
            );
            let mut acc_a: Option<Vec<Auth>> = None;
            let mut acc_k: Option<Vec<Key>> = None;
            for (c, &j) in included.iter().enumerate() {
                let block = &opened[(d + 1) * c..(d + 1) * (c + 1)];
                let a = scale_finish(&mat.scalar_vector.parties[i][j], block[0], &block[1..]);
                let k = scale_finish(&mat.scalar_vector.ledger[i][j], block[0], &block[1..]);
                acc_a = Some(acc_a.map_or(a.clone(), |x| vadd(&x, &a)));
                acc_k = Some(acc_k.map_or(k.clone(), |x| vadd(&x, &k)));
            }
            s2_a.insert(i, acc_a.expect("nonempty"));
            s2_k.insert(i, acc_k.expect("nonempty"));
        }

        // Mask both sums with lambda and open them.
        let (s_last, sv_last) = ((tau - 1) * n, n);
        let sent = responders
            .iter()
            .map(|&i| {
                let (la, lk) = (&mat.lambda.parties[i][0], &mat.lambda.ledger[i][0]);
                let (e1, d1) = mul_open(la, &s1_a[&i], &mat.scalar.parties[i][s_last]);
                let (ek1, dk1) = mul_open(lk, &s1_k[&i], &mat.scalar.ledger[i][s_last]);
                let (e2, d2) = scale_open(la, &s2_a[&i], &mat.scalar_vector.parties[i][sv_last]);
                let (ek2, dk2) = scale_open(lk, &s2_k[&i], &mat.scalar_vector.ledger[i][sv_last]);
                Sent {
                    party: i,
                    shares: corrupt(
                        i,
                        true,
                        [e1, d1, e2].into_iter().chain(d2).collect(),
                        &mut adv,
                    ),
                    keys: [ek1, dk1, ek2].into_iter().chain(dk2).collect(),
                }
            })
            .collect();
        let opened = self.open_round(
            tr,
            MessageKind::BeaverOpen,
            sent,
            alpha,
            &mut flagged,
            Stage::BeaverOpen,
        )?;
        self.announce(tr, &present, &opened);
        let sent = responders
            .iter()
            .map(|&i| {
                let a1 = mul_finish(&mat.scalar.parties[i][s_last], opened[0], opened[1]);
                let k1 = mul_finish(&mat.scalar.ledger[i][s_last], opened[0], opened[1]);
                let a2 = scale_finish(
                    &mat.scalar_vector.parties[i][sv_last],
                    opened[2],
                    &opened[3..],
                );
                let k2 = scale_finish(
                    &mat.scalar_vector.ledger[i][sv_last],
                    opened[2],
                    &opened[3..],
                );
                Sent {
                    party: i,
                    shares: corrupt(i, true, std::iter::once(a1).chain(a2).collect(), &mut adv),
                    keys: std::iter::once(k1).chain(k2).collect(),
                }
            })
            .collect();
        let result = self.open_round(
            tr,
            MessageKind::SigmaShare,
            sent,
            alpha,
            &mut flagged,
            Stage::SigmaOpen,
        )?;
        let ls1 = result[0];
        let ls2 = FieldVector::new(modulus, result[1..].to_vec())?;

        let agg = aggregate(p, ls1, &ls2, u0)?;
        Ok(IterationOutcome {
            update: agg.update,
            nu: agg.nu,
            degenerate: agg.degenerate,
            included,
            excluded,
            flagged,
            lambda: mat.lambda_value,
            lambda_sigma1: ls1,
            lambda_sigma2: ls2,
            lambda_attempts: 1,
            inputs,
        })
    }
}
