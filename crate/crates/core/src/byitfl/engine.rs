use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::ChaCha20Rng;

use crate::adversary::{Misbehavior, Roles};
use crate::discriminator::DiscriminatorPoly;
use crate::field::{centered_lift, FieldVector, Fp};
use crate::protocol::{
    aggregate, norm_passes, quantize_inputs, Exclusion, IterationContext, IterationOutcome,
    ProtocolError, QuantizedInputs, Stage,
};
use crate::quantize::RealUpdate;
use crate::rng::Purpose;
use crate::sharing::{
    eval_poly_on_shares, itvss_distribute, itvss_verify, masking_shares, recombine,
    rs_decode_shares, share_with_anchors, subshare_with, BivariateSharing, EvaluationDomain, Share,
    VectorDecoding,
};
use crate::transcript::{Endpoint, MessageKind, Transcript};
use crate::Real;

use super::ByitflConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    /// Adds fresh zero-secret polynomials to every sharing opened by the
    /// federator.
    pub masking: bool,
    /// Fresh `lambda` attempts after a zero `lambda Sigma_1`.
    pub lambda_retries: usize,
    /// Test fixture: the first attempts run with `lambda = 0`.
    pub zero_lambda_attempts: usize,
    /// Test fixture: per-user `lambda_j` for the first attempt.
    pub lambda_override: Option<Vec<Fp>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            masking: true,
            lambda_retries: 3,
            zero_lambda_attempts: 0,
            lambda_override: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Byitfl<T> {
    cfg: ByitflConfig,
    domain: EvaluationDomain,
    poly: DiscriminatorPoly<T>,
}

type Rngs = BTreeMap<usize, ChaCha20Rng>;

fn rngs(ctx: IterationContext, parties: &[usize], purpose: Purpose) -> Rngs {
    parties
        .iter()
        .map(|&j| (j, ctx.rng(j as u64, purpose)))
        .collect()
}

/// Breaks one column of an honest verifier's view.
fn tamper(s: &mut BivariateSharing, verifiers: &[usize]) {
    let Some(&victim) = verifiers.iter().find(|&&v| v != s.dealer) else {
        return;
    };
    let col = &mut s.views[victim].col;
    let last = col.len() - 1;
    let modulus = col[last].modulus();
    let mut v = col[last].clone().into_vec();
    if let Some(x) = v.first_mut() {
        *x += Fp::one(modulus);
    }
    col[last] = FieldVector::new(modulus, v).expect("one modulus");
}

fn log_views(tr: &mut Transcript, s: &BivariateSharing, present: &[usize], kind: MessageKind) {
    for &i in present {
        let view = &s.views[i];
        let elements = view.row.iter().chain(&view.col).map(|v| v.len()).sum();
        tr.send(
            Endpoint::User(s.dealer),
            Endpoint::User(i),
            kind,
            elements,
            || {
                view.row
                    .iter()
                    .chain(&view.col)
                    .flat_map(|v| v.iter().copied())
                    .collect()
            },
        );
    }
}

fn log_consistency(tr: &mut Transcript, s: &BivariateSharing, present: &[usize]) {
    for &i in present {
        for &l in present.iter().filter(|&&l| l != i) {
            let v = &s.views[i].row[l];
            tr.send(
                Endpoint::User(i),
                Endpoint::User(l),
                MessageKind::Consistency,
                v.len(),
                || v.to_vec(),
            );
        }
    }
}

fn decode(shares: &[Share], deg: usize, stage: Stage) -> Result<VectorDecoding, ProtocolError> {
    rs_decode_shares(shares, deg)?.ok_or(ProtocolError::IterationFailed { stage })
}

impl<T: Real> Byitfl<T> {
    pub fn new(cfg: ByitflConfig) -> Result<Self, ProtocolError> {
        let p = cfg.params();
        let domain = EvaluationDomain::standard(p.modulus, p.sharing())?;
        let poly = p.poly()?;
        Ok(Self { cfg, domain, poly })
    }

    pub fn config(&self) -> &ByitflConfig {
        &self.cfg
    }

    pub fn domain(&self) -> &EvaluationDomain {
        &self.domain
    }

    pub fn poly(&self) -> &DiscriminatorPoly<T> {
        &self.poly
    }

    /// Quantizes the real inputs, then runs [`Byitfl::run_quantized`].
    pub fn run_iteration(
        &self,
        ctx: IterationContext,
        updates: &[RealUpdate<T>],
        u0: &RealUpdate<T>,
        roles: &Roles,
        transcript: &mut Transcript,
    ) -> Result<IterationOutcome<T>, ProtocolError> {
        let inputs = quantize_inputs(self.cfg.params(), ctx, updates, u0, roles)?;
        self.run_quantized(ctx, inputs, u0, roles, &RunOptions::default(), transcript)
    }

    fn masks(
        &self,
        mask_rngs: &mut Rngs,
        present: &[usize],
        len: usize,
        deg: usize,
    ) -> Vec<Vec<FieldVector>> {
        present
            .iter()
            .map(|l| {
                masking_shares(
                    len,
                    deg,
                    &self.domain,
                    mask_rngs.get_mut(l).expect("present party"),
                )
            })
            .collect()
    }

    /// Per-party shares of packed vectors, `None` for absent parties.
    fn held_shares(
        &self,
        s: &BivariateSharing,
        roles: &Roles,
    ) -> Result<Vec<Option<FieldVector>>, ProtocolError> {
        let deg = self.cfg.params().degree();
        (0..self.cfg.params().n)
            .map(|i| {
                if roles.present(i) {
                    Ok(Some(s.views[i].share(&self.domain, deg)?))
                } else {
                    Ok(None)
                }
            })
            .collect()
    }

    /// The protocol on already quantized inputs.
    pub fn run_quantized(
        &self,
        ctx: IterationContext,
        inputs: QuantizedInputs,
        u0: &RealUpdate<T>,
        roles: &Roles,
        opts: &RunOptions,
        tr: &mut Transcript,
    ) -> Result<IterationOutcome<T>, ProtocolError> {
        let p = self.cfg.params();
        let (n, m, deg) = (p.n, p.m, p.degree());
        let sp = p.sharing();
        let modulus = p.modulus;
        let dom = &self.domain;
        let anchors = dom.secret_anchors().to_vec();
        let pad = p.padded_dim();
        let part = pad / m;

        let present: Vec<usize> = (0..n).filter(|&j| roles.present(j)).collect();
        let verifiers: Vec<usize> = present
            .iter()
            .copied()
            .filter(|&j| roles.is_honest(j))
            .collect();
        let responders: Vec<usize> = present
            .iter()
            .copied()
            .filter(|&j| roles.responds(j))
            .collect();
        let mut excluded = BTreeMap::new();
        let mut flagged = BTreeSet::new();
        let dealers: Vec<usize> = present
            .iter()
            .copied()
            .filter(|&j| inputs.users[j].is_some())
            .collect();
        for j in (0..n).filter(|j| !dealers.contains(j)) {
            excluded.insert(j, Exclusion::Absent);
        }
        let mut mask_rngs = rngs(ctx, &present, Purpose::Mask);
        let mut lambda_rngs = rngs(ctx, &dealers, Purpose::Lambda);
        let mut adv_rngs = rngs(ctx, &present, Purpose::Adversary);

        for &i in &present {
            tr.send(
                Endpoint::Federator,
                Endpoint::User(i),
                MessageKind::RootBroadcast,
                pad,
                || inputs.root.values.to_vec(),
            );
        }

        // Verifiable sharing of the updates and of lambda_j.
        let mut u_sharings = BTreeMap::new();
        let mut l_sharings = BTreeMap::new();
        let mut lambda_parts = BTreeMap::new();
        for &j in &dealers {
            let secret = &inputs.users[j].as_ref().expect("dealer has input").values;
            let mut s =
                itvss_distribute(j, secret, sp, dom, &mut ctx.rng(j as u64, Purpose::Sharing))?;
            if roles.misbehavior[j] == Some(Misbehavior::InvalidSharing) {
                tamper(&mut s, &verifiers);
            }
            log_views(tr, &s, &present, MessageKind::UpdateSharing);
            let rng = lambda_rngs.get_mut(&j).expect("dealer");
            let lj = match &opts.lambda_override {
                Some(v) => v[j],
                None => Fp::random(modulus, rng),
            };
            let ls = itvss_distribute(j, &FieldVector::new(modulus, vec![lj; m])?, sp, dom, rng)?;
            log_views(tr, &ls, &present, MessageKind::LambdaSharing);
            lambda_parts.insert(j, lj);
            u_sharings.insert(j, s);
            l_sharings.insert(j, ls);
        }
        for s in u_sharings.values().chain(l_sharings.values()) {
            log_consistency(tr, s, &present);
        }
        let all: Vec<BivariateSharing> = u_sharings
            .values()
            .chain(l_sharings.values())
            .cloned()
            .collect();
        let accused = itvss_verify(&all, &verifiers, sp, dom)?;
        for &j in &accused {
            excluded.insert(j, Exclusion::InvalidSharing);
        }
        let candidates: Vec<usize> = dealers
            .iter()
            .copied()
            .filter(|j| !accused.contains(j))
            .collect();
        let mut shares: BTreeMap<usize, Vec<Option<FieldVector>>> = BTreeMap::new();
        for &j in &candidates {
            shares.insert(j, self.held_shares(&u_sharings[&j], roles)?);
        }

        // Norm validation.
        let mut norms: Vec<Option<FieldVector>> = (0..n)
            .map(|i| {
                roles.present(i).then(|| {
                    let v = candidates
                        .iter()
                        .map(|j| {
                            let s = shares[j][i].as_ref().expect("present party");
                            s.dot(s)
                        })
                        .collect();
                    FieldVector::new(modulus, v).expect("one modulus")
                })
            })
            .collect();
        if opts.masking && !candidates.is_empty() {
            let masks = self.masks(&mut mask_rngs, &present, candidates.len(), 2 * deg);
            for (l, ms) in present.iter().zip(&masks) {
                for &i in &present {
                    tr.send(
                        Endpoint::User(*l),
                        Endpoint::User(i),
                        MessageKind::NormMask,
                        candidates.len(),
                        || ms[i].to_vec(),
                    );
                    norms[i].as_mut().expect("present").add_assign(&ms[i]);
                }
            }
        }
        let mut norm_shares = Vec::new();
        for &i in &responders {
            let mut v = norms[i].take().expect("present");
            if roles.misbehavior[i] == Some(Misbehavior::CorruptMac) {
                v = FieldVector::random(modulus, v.len(), adv_rngs.get_mut(&i).expect("present"));
            }
            tr.send(
                Endpoint::User(i),
                Endpoint::Federator,
                MessageKind::NormShare,
                v.len(),
                || v.to_vec(),
            );
            norm_shares.push(Share {
                owner: i,
                point: dom.alphas()[i],
                value: v,
            });
        }
        let mut included = Vec::new();
        if !candidates.is_empty() {
            let dec = decode(&norm_shares, 2 * deg, Stage::NormDecode)?;
            flagged.extend(dec.corrupted.iter().copied());
            let at = dec.eval_at(&anchors);
            for (c, &j) in candidates.iter().enumerate() {
                let total: Fp = (0..m).map(|k| at[k * candidates.len() + c]).sum();
                if norm_passes(centered_lift(total), p.q, p.epsilon) {
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
                    candidates.len(),
                    || {
                        candidates
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
                lambda: zero,
                lambda_sigma1: zero,
                lambda_sigma2: FieldVector::zeros(modulus, pad),
                lambda_attempts: 0,
                inputs,
            });
        }

        // Inner products with the public root update.
        let x: Vec<Vec<Fp>> = if m == 1 {
            (0..n)
                .map(|i| {
                    if !roles.present(i) {
                        return Vec::new();
                    }
                    included
                        .iter()
                        .map(|j| {
                            inputs
                                .root
                                .values
                                .dot(shares[j][i].as_ref().expect("present"))
                        })
                        .collect()
                })
                .collect()
        } else {
            let zeros: Vec<FieldVector> = (0..p.t)
                .map(|_| FieldVector::zeros(modulus, part))
                .collect();
            let root_shares = share_with_anchors(&inputs.root.values.partition(m)?, &zeros, dom)?;
            let products: Vec<Share> = present
                .iter()
                .map(|&i| Share {
                    owner: i,
                    point: dom.alphas()[i],
                    value: FieldVector::new(
                        modulus,
                        included
                            .iter()
                            .map(|j| {
                                root_shares[i]
                                    .value
                                    .dot(shares[j][i].as_ref().expect("present"))
                            })
                            .collect(),
                    )
                    .expect("one modulus"),
                })
                .collect();
            let ones = vec![vec![Fp::one(modulus); m]; m];
            let mut calls = 0usize;
            let sub = subshare_with(&products, 2 * deg, Some(&ones), sp, dom, &mut |len| {
                let who = present[calls / p.t];
                calls += 1;
                FieldVector::random(modulus, len, mask_rngs.get_mut(&who).expect("present"))
            })?;
            for (who, dealt) in sub.contributors.iter().zip(&sub.dealt) {
                for &i in &present {
                    let v = &dealt[i].value;
                    tr.send(
                        Endpoint::User(*who),
                        Endpoint::User(i),
                        MessageKind::Reduction,
                        v.len(),
                        || v.to_vec(),
                    );
                }
            }
            let reduced = recombine(&sub, dom);
            (0..n)
                .map(|i| {
                    if roles.present(i) {
                        reduced[i].value.to_vec()
                    } else {
                        Vec::new()
                    }
                })
                .collect()
        };

        // Trust scores and the two sums on shares.
        let coeffs = self.poly.field_coeffs();
        let mut sigma1 = vec![zero; n];
        let mut sigma2: Vec<FieldVector> = vec![FieldVector::zeros(modulus, part); n];
        for &i in &present {
            let h = eval_poly_on_shares(&x[i], coeffs);
            for (c, j) in included.iter().enumerate() {
                sigma1[i] += h[c];
                sigma2[i].add_assign(&shares[j][i].as_ref().expect("present").scale(h[c]));
            }
        }

        let (deg1, deg2) = ((p.tau + 1) * deg, (p.tau + 2) * deg);
        let mut lambda_holders: Vec<usize> = included.clone();
        let mut attempt = 0usize;
        let (lambda, ls1, ls2) = loop {
            if attempt > 0 {
                let mut fresh = Vec::new();
                for &j in &included {
                    let rng = lambda_rngs.get_mut(&j).expect("dealer");
                    let lj = Fp::random(modulus, rng);
                    let ls = itvss_distribute(
                        j,
                        &FieldVector::new(modulus, vec![lj; m])?,
                        sp,
                        dom,
                        rng,
                    )?;
                    log_views(tr, &ls, &present, MessageKind::LambdaSharing);
                    log_consistency(tr, &ls, &present);
                    lambda_parts.insert(j, lj);
                    fresh.push(ls.clone());
                    l_sharings.insert(j, ls);
                }
                let bad = itvss_verify(&fresh, &verifiers, sp, dom)?;
                lambda_holders = included
                    .iter()
                    .copied()
                    .filter(|j| !bad.contains(j))
                    .collect();
            }
            let forced_zero = attempt < opts.zero_lambda_attempts;
            let mut lam_shares = vec![zero; n];
            let mut lambda = zero;
            if !forced_zero {
                for &j in &lambda_holders {
                    lambda += lambda_parts[&j];
                    let held = self.held_shares(&l_sharings[&j], roles)?;
                    for &i in &present {
                        lam_shares[i] += held[i].as_ref().expect("present")[0];
                    }
                }
            }
            let mut out1: Vec<FieldVector> = present
                .iter()
                .map(|&i| {
                    FieldVector::new(modulus, vec![lam_shares[i] * sigma1[i]]).expect("one modulus")
                })
                .collect();
            let mut out2: Vec<FieldVector> = present
                .iter()
                .map(|&i| sigma2[i].scale(lam_shares[i]))
                .collect();
            if opts.masking {
                let m1 = self.masks(&mut mask_rngs, &present, 1, deg1);
                let m2 = self.masks(&mut mask_rngs, &present, part, deg2);
                for (l, (a, b)) in present.iter().zip(m1.iter().zip(&m2)) {
                    for (pos, &i) in present.iter().enumerate() {
                        tr.send(
                            Endpoint::User(*l),
                            Endpoint::User(i),
                            MessageKind::SigmaMask,
                            1 + part,
                            || a[i].iter().chain(b[i].iter()).copied().collect(),
                        );
                        out1[pos].add_assign(&a[i]);
                        out2[pos].add_assign(&b[i]);
                    }
                }
            }
            let mut sh1 = Vec::new();
            let mut sh2 = Vec::new();
            for (pos, &i) in present.iter().enumerate() {
                if !roles.responds(i) {
                    continue;
                }
                let (mut a, mut b) = (out1[pos].clone(), out2[pos].clone());
                if matches!(
                    roles.misbehavior[i],
                    Some(Misbehavior::CorruptSigmaShares | Misbehavior::CorruptMac)
                ) {
                    let rng = adv_rngs.get_mut(&i).expect("present");
                    a = FieldVector::random(modulus, 1, rng);
                    b = FieldVector::random(modulus, part, rng);
                }
                tr.send(
                    Endpoint::User(i),
                    Endpoint::Federator,
                    MessageKind::SigmaShare,
                    1 + part,
                    || a.iter().chain(b.iter()).copied().collect(),
                );
                if flagged.contains(&i) {
                    continue;
                }
                let point = dom.alphas()[i];
                sh1.push(Share {
                    owner: i,
                    point,
                    value: a,
                });
                sh2.push(Share {
                    owner: i,
                    point,
                    value: b,
                });
            }
            let d1 = decode(&sh1, deg1, Stage::SigmaDecode)?;
            let d2 = decode(&sh2, deg2, Stage::SigmaDecode)?;
            flagged.extend(d1.corrupted.iter().chain(&d2.corrupted).copied());
            let ls1 = d1.eval_at(&anchors[..1])[0];
            let ls2 = d2.eval_at(&anchors);
            attempt += 1;
            if ls1.is_zero() && attempt <= opts.lambda_retries {
                continue;
            }
            break (lambda, ls1, ls2);
        };

        let agg = aggregate(p, ls1, &ls2, u0)?;
        Ok(IterationOutcome {
            update: agg.update,
            nu: agg.nu,
            degenerate: agg.degenerate,
            included,
            excluded,
            flagged,
            lambda,
            lambda_sigma1: ls1,
            lambda_sigma2: ls2,
            lambda_attempts: attempt,
            inputs,
        })
    }
}
