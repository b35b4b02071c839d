use std::collections::HashMap;

use itfl_core::field::{Fp, PrimeModulus};
use itfl_core::mpc::*;
use itfl_core::sharing::{EvaluationDomain, SharingParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn setup(p: u128, n: usize, t: usize) -> (PrimeModulus, EvaluationDomain) {
    let m = PrimeModulus::new(p).unwrap();
    let d = EvaluationDomain::standard(m, SharingParams::new(n, 1, t).unwrap()).unwrap();
    (m, d)
}

fn open(d: &EvaluationDomain, vals: &[Fp], t: usize) -> Fp {
    let c: Vec<(usize, Fp)> = vals.iter().copied().enumerate().collect();
    lagrange_open(d, &c, t).unwrap()
}

fn plain_triples(shares: [&[Fp]; 3]) -> Vec<ScalarTriple<Fp>> {
    (0..shares[0].len())
        .map(|i| ScalarTriple {
            gamma: shares[0][i],
            omega: shares[1][i],
            kappa: shares[2][i],
        })
        .collect()
}

#[test]
fn beaver_multiply_worked_example() {
    let (m, d) = setup(17, 3, 1);
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let e = |v: u128| Fp::new(v, m);
    let s = share_plain(e(3), &d, 1, &mut rng);
    let v = share_plain(e(4), &d, 1, &mut rng);
    let g = share_plain(e(5), &d, 1, &mut rng);
    let w = share_plain(e(2), &d, 1, &mut rng);
    let k = share_plain(e(10), &d, 1, &mut rng);
    let triples = plain_triples([&g, &w, &k]);
    let masked: Vec<(Fp, Fp)> = (0..3)
        .map(|i| mul_open(&s[i], &v[i], &triples[i]))
        .collect();
    let eps = open(&d, &masked.iter().map(|x| x.0).collect::<Vec<_>>(), 1);
    let delta = open(&d, &masked.iter().map(|x| x.1).collect::<Vec<_>>(), 1);
    assert_eq!((eps.value(), delta.value()), (15, 2));
    let out = beaver_multiply(&d, 1, &s, &v, &triples).unwrap();
    assert_eq!(open(&d, &out, 1).value(), 12);
    // no degree growth: every pair of outputs agrees
    let alt = lagrange_open(&d, &[(2, out[2]), (1, out[1])], 1).unwrap();
    assert_eq!(alt.value(), 12);
}

#[test]
fn beaver_multiply_zero_and_identity_factors() {
    let (m, d) = setup(101, 5, 2);
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    for trial in 0..100 {
        let sv = Fp::random(m, &mut rng);
        let (gv, wv) = (Fp::random(m, &mut rng), Fp::random(m, &mut rng));
        let g = share_plain(gv, &d, 2, &mut rng);
        let w = share_plain(wv, &d, 2, &mut rng);
        let k = share_plain(gv * wv, &d, 2, &mut rng);
        let triples = plain_triples([&g, &w, &k]);
        let s = share_plain(sv, &d, 2, &mut rng);
        let factor = if trial % 2 == 0 {
            Fp::one(m)
        } else {
            Fp::zero(m)
        };
        let v = share_plain(factor, &d, 2, &mut rng);
        let out = beaver_multiply(&d, 2, &s, &v, &triples).unwrap();
        assert_eq!(open(&d, &out, 2), sv * factor);
        let c: Vec<(usize, Fp)> = out.iter().copied().enumerate().skip(2).collect();
        assert_eq!(lagrange_open(&d, &c, 2).unwrap(), sv * factor);
    }
}

#[test]
fn dot_and_scale_examples() {
    let (m, d) = setup(17, 4, 1);
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut authority = MacAuthority::new(m, &mut rng);
    let params = SharingParams::new(4, 1, 1).unwrap();
    let strip_dot = |b: TripleBatch| match b {
        TripleBatch::Dot(dealt) => dealt
            .parties
            .iter()
            .map(|p| {
                let tr = &p.items()[0];
                DotTriple {
                    iota: tr.iota.iter().map(|a| a.value).collect(),
                    phi: tr.phi.iter().map(|a| a.value).collect(),
                    chi: tr.chi.value,
                }
            })
            .collect::<Vec<_>>(),
        _ => unreachable!(),
    };
    let share_vec = |vals: &[u128], rng: &mut ChaCha20Rng| {
        let per: Vec<Vec<Fp>> = vals
            .iter()
            .map(|&v| share_plain(Fp::new(v, m), &d, 1, rng))
            .collect();
        (0..4)
            .map(|i| per.iter().map(|s| s[i]).collect::<Vec<_>>())
            .collect::<Vec<_>>()
    };
    let x = share_vec(&[1, 2], &mut rng);
    let y = share_vec(&[3, 4], &mut rng);
    let z = share_vec(&[0, 0], &mut rng);
    let triples = strip_dot(ttp_generate_triples(
        TripleKind::Dot,
        1,
        2,
        params,
        &d,
        &mut authority,
        &mut rng,
    ));
    assert_eq!(
        open(&d, &beaver_dot(&d, 1, &x, &y, &triples).unwrap(), 1).value(),
        11
    );
    assert_eq!(
        open(&d, &beaver_dot(&d, 1, &x, &z, &triples).unwrap(), 1).value(),
        0
    );

    // squared norm of the level vector (-2, 3, 1)
    let (mq, dq) = setup(1009, 4, 1);
    let mut auth_q = MacAuthority::new(mq, &mut rng);
    let pq = SharingParams::new(4, 1, 1).unwrap();
    let levels = [-2i128, 3, 1];
    let xs: Vec<Vec<Fp>> = {
        let per: Vec<Vec<Fp>> = levels
            .iter()
            .map(|&l| share_plain(Fp::from_i128(l, mq), &dq, 1, &mut rng))
            .collect();
        (0..4).map(|i| per.iter().map(|s| s[i]).collect()).collect()
    };
    let tq = match ttp_generate_triples(TripleKind::Dot, 1, 3, pq, &dq, &mut auth_q, &mut rng) {
        TripleBatch::Dot(dealt) => dealt
            .parties
            .iter()
            .map(|p| {
                let tr = &p.items()[0];
                DotTriple {
                    iota: tr.iota.iter().map(|a| a.value).collect(),
                    phi: tr.phi.iter().map(|a| a.value).collect(),
                    chi: tr.chi.value,
                }
            })
            .collect::<Vec<_>>(),
        _ => unreachable!(),
    };
    let norm2 = open(&dq, &beaver_dot(&dq, 1, &xs, &xs, &tq).unwrap(), 1);
    assert_eq!(itfl_core::field::centered_lift(norm2), 14);

    let sv = match ttp_generate_triples(
        TripleKind::ScalarVector,
        1,
        2,
        params,
        &d,
        &mut authority,
        &mut rng,
    ) {
        TripleBatch::ScalarVector(dealt) => dealt
            .parties
            .iter()
            .map(|p| {
                let tr = &p.items()[0];
                ScalarVectorTriple {
                    zeta: tr.zeta.value,
                    xi: tr.xi.iter().map(|a| a.value).collect(),
                    psi: tr.psi.iter().map(|a| a.value).collect(),
                }
            })
            .collect::<Vec<_>>(),
        _ => unreachable!(),
    };
    let x = share_vec(&[3, 5], &mut rng);
    for (c, want) in [(2u128, [6u128, 10]), (0, [0, 0]), (1, [3, 5])] {
        let cs = share_plain(Fp::new(c, m), &d, 1, &mut rng);
        let out = beaver_scale_vector(&d, 1, &cs, &x, &sv).unwrap();
        for k in 0..2 {
            let col: Vec<Fp> = out.iter().map(|o| o[k]).collect();
            assert_eq!(open(&d, &col, 1).value(), want[k]);
        }
    }
}

#[test]
fn generated_triples_are_consistent_and_tagged() {
    let (m, d) = setup(PrimeModulus::MERSENNE_61, 5, 2);
    let params = SharingParams::new(5, 1, 2).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut authority = MacAuthority::new(m, &mut rng);
    let alpha = authority.alpha();
    let TripleBatch::Scalar(dealt) = ttp_generate_triples(
        TripleKind::Scalar,
        20,
        0,
        params,
        &d,
        &mut authority,
        &mut rng,
    ) else {
        unreachable!()
    };
    for j in 0..20 {
        let col = |f: &dyn Fn(&ScalarTriple<Auth>) -> Fp| -> Fp {
            open(
                &d,
                &dealt
                    .parties
                    .iter()
                    .map(|p| f(&p.items()[j]))
                    .collect::<Vec<_>>(),
                2,
            )
        };
        assert_eq!(
            col(&|t| t.gamma.value) * col(&|t| t.omega.value),
            col(&|t| t.kappa.value)
        );
        for i in 0..5 {
            let a = &dealt.parties[i].items()[j];
            let k = &dealt.ledger[i].items()[j];
            assert!(mac_check(&a.gamma, &k.gamma, alpha));
            assert!(mac_check(&a.kappa, &k.kappa, alpha));
        }
    }
    let TripleBatch::Dot(empty) =
        ttp_generate_triples(TripleKind::Dot, 0, 3, params, &d, &mut authority, &mut rng)
    else {
        unreachable!()
    };
    assert!(empty.ledger.iter().all(|l| l.is_empty()));
}

#[test]
fn table_budget() {
    let b = TripleBudget::per_iteration(4, 3);
    assert_eq!(
        (b.dot, b.scalar, b.scalar_vector, b.random_vectors, b.lambda),
        (4, 9, 5, 4, 1)
    );
    assert_eq!(TripleBudget::per_iteration(4, 3).times(2).scalar, 18);
}

#[test]
fn triple_reuse_is_an_error() {
    let mut pool = TriplePool::new(vec![1, 2]);
    assert_eq!(*pool.take(1).unwrap(), 2);
    assert_eq!(pool.take(1), Err(MpcError::TripleReused { index: 1 }));
    assert_eq!(pool.take(2), Err(MpcError::Exhausted { used: 2 }));
    pool.burn(0).unwrap();
    assert_eq!(pool.consumed(), 2);
}

#[test]
fn mac_examples() {
    let m = PrimeModulus::new(17).unwrap();
    let e = |v: u128| Fp::new(v, m);
    let key = MacKey {
        id: 0,
        alpha: e(3),
        beta: e(4),
    };
    assert_eq!(mac_tag(e(6), &key).value(), 5);
    assert_eq!(mac_tag(e(0), &key), e(4));
    let mut auth = MacAuthority::with_alpha(e(3));
    auth.tag(e(6), &key).unwrap();
    assert_eq!(auth.tag(e(1), &key), Err(MpcError::KeyReused { id: 0 }));
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for _ in 0..2000 {
        assert!(!MacAuthority::new(m, &mut rng).alpha().is_zero());
    }
}

#[test]
fn linear_mac_check() {
    let m = PrimeModulus::new(PrimeModulus::MERSENNE_127).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let mut authority = MacAuthority::new(m, &mut rng);
    let alpha = authority.alpha();
    let vals: Vec<Fp> = (0..3).map(|_| Fp::random(m, &mut rng)).collect();
    let pairs: Vec<(Auth, Key)> = vals
        .iter()
        .map(|&v| authority.authenticate(v, &mut rng))
        .collect();
    let coeffs: Vec<Fp> = (0..3).map(|_| Fp::random(m, &mut rng)).collect();
    let c = Fp::random(m, &mut rng);
    let claimed = vals.iter().zip(&coeffs).map(|(&v, &a)| v * a).sum::<Fp>() + c;
    let tag = pairs
        .iter()
        .zip(&coeffs)
        .map(|(p, &a)| p.0.tag * a)
        .sum::<Fp>();
    let betas: Vec<Fp> = pairs.iter().map(|p| p.1.beta).collect();
    assert!(mac_check_linear(claimed, tag, &coeffs, &betas, c, alpha));
    assert!(!mac_check_linear(
        claimed + Fp::one(m),
        tag,
        &coeffs,
        &betas,
        c,
        alpha
    ));
    // the same combination through the Linear trait
    let combined_a = pairs
        .iter()
        .zip(&coeffs)
        .fold(
            Auth {
                value: Fp::zero(m),
                tag: Fp::zero(m),
            },
            |acc, (p, &a)| acc.add(&p.0.scale(a)),
        )
        .add_public(c);
    let combined_k = pairs
        .iter()
        .zip(&coeffs)
        .fold(
            Key {
                beta: Fp::zero(m),
                offset: Fp::zero(m),
            },
            |acc, (p, &a)| acc.add(&p.1.scale(a)),
        )
        .add_public(c);
    assert_eq!(combined_a.value, claimed);
    assert!(mac_check(&combined_a, &combined_k, alpha));
}

#[test]
fn forgery_acceptance_is_exactly_one_in_p() {
    let p = 31u128;
    let m = PrimeModulus::new(p).unwrap();
    for (alpha, beta, value) in [(3u128, 7u128, 12u128), (30, 0, 5), (1, 29, 0)] {
        let a = Fp::new(alpha, m);
        let key = Key {
            beta: Fp::new(beta, m),
            offset: Fp::zero(m),
        };
        for forged in (0..p).filter(|&v| v != value) {
            let accepted = (0..p)
                .filter(|&tag| {
                    mac_check(
                        &Auth {
                            value: Fp::new(forged, m),
                            tag: Fp::new(tag, m),
                        },
                        &key,
                        a,
                    )
                })
                .count();
            assert_eq!(accepted, 1);
        }
    }
}

#[test]
fn forgery_rate_sampled() {
    let m = PrimeModulus::new(101).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let trials = 20_000u32;
    let mut hits = 0u32;
    for _ in 0..trials {
        let mut authority = MacAuthority::new(m, &mut rng);
        let value = Fp::random(m, &mut rng);
        let (auth, key) = authority.authenticate(value, &mut rng);
        let forged = Auth {
            value: value + Fp::random_nonzero(m, &mut rng),
            tag: Fp::random(m, &mut rng),
        };
        let _ = auth;
        if mac_check(&forged, &key, authority.alpha()) {
            hits += 1;
        }
    }
    let rate = hits as f64 / trials as f64;
    let sd = ((1.0 / 101.0) * (100.0 / 101.0) / trials as f64).sqrt();
    assert!((rate - 1.0 / 101.0).abs() <= 3.0 * sd + 1e-12);
}

#[test]
fn broadcast_masked_values_are_secret_independent() {
    let (m, d) = setup(31, 3, 1);
    let hist = |s_val: u128| {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let s = share_plain(Fp::new(s_val, m), &d, 1, &mut rng);
        let v = share_plain(Fp::new(9, m), &d, 1, &mut rng);
        let mut counts: HashMap<(u128, u128), usize> = HashMap::new();
        for gv in 0..31u128 {
            for wv in 0..31u128 {
                let g = share_plain(Fp::new(gv, m), &d, 1, &mut rng);
                let w = share_plain(Fp::new(wv, m), &d, 1, &mut rng);
                let k = share_plain(Fp::new(gv * wv % 31, m), &d, 1, &mut rng);
                let tr = plain_triples([&g, &w, &k]);
                let masked: Vec<(Fp, Fp)> =
                    (0..3).map(|i| mul_open(&s[i], &v[i], &tr[i])).collect();
                let eps = open(&d, &masked.iter().map(|x| x.0).collect::<Vec<_>>(), 1);
                let delta = open(&d, &masked.iter().map(|x| x.1).collect::<Vec<_>>(), 1);
                *counts.entry((eps.value(), delta.value())).or_insert(0) += 1;
            }
        }
        counts
    };
    let a = hist(4);
    assert_eq!(a.len(), 31 * 31);
    assert_eq!(a, hist(22));
}

#[test]
fn authenticated_opening_rejects_bad_tags() {
    let (m, d) = setup(PrimeModulus::MERSENNE_61, 4, 1);
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let mut authority = MacAuthority::new(m, &mut rng);
    let secret = Fp::new(777, m);
    let (auths, keys) = share_authenticated(secret, &d, 1, &mut authority, &mut rng);
    let mut contribs: Vec<(usize, Auth, Key)> = (0..4).map(|i| (i, auths[i], keys[i])).collect();
    contribs[0].1.value += Fp::new(rng.random_range(1..1000), m);
    let opened = open_authenticated(&d, &contribs, authority.alpha(), 1).unwrap();
    assert_eq!(opened.value, secret);
    assert_eq!(opened.rejected, vec![0]);
    for c in contribs.iter_mut() {
        c.1.tag += Fp::one(m);
    }
    assert!(matches!(
        open_authenticated(&d, &contribs, authority.alpha(), 1),
        Err(MpcError::InsufficientVerified { .. })
    ));
}
