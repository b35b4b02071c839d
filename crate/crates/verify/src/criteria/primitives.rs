use itfl_core::discriminator::h_real;
use itfl_core::field::{FieldVector, Fp, PrimeModulus};
use itfl_core::mpc::{mac_check, Auth, MacAuthority};
use itfl_core::quantize::stochastic_quantize;
use itfl_core::sharing::{rs_decode, share_with_anchors, EvaluationDomain, SharingParams};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{timed, Outcome, Report};
use crate::oracle::{self, binomial_sd, histogram, subset_decode, Histogram};

fn modulus(p: u128) -> PrimeModulus {
    PrimeModulus::new(p).expect("prime")
}

fn fp(values: &[u128], m: PrimeModulus) -> Vec<Fp> {
    values.iter().map(|&v| Fp::new(v, m)).collect()
}

/// One trial at `(n, k, e)` with `b` errors; `Err` on a decoding mismatch.
fn rs_trial(rng: &mut ChaCha20Rng, n: usize, k: usize, e: usize, b: usize) -> Result<(), String> {
    let p = PrimeModulus::MERSENNE_61;
    let m = modulus(p);
    let coeffs: Vec<u128> = (0..k).map(|_| rng.random_range(0..p)).collect();
    let eval = |x: u128| {
        coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| (oracle::mul(acc, x, p) + c) % p)
    };
    let mut kept: Vec<usize> = sample(rng, n, n - e).into_vec();
    kept.sort_unstable();
    let xs: Vec<u128> = kept.iter().map(|&i| i as u128 + 1).collect();
    let word: Vec<u128> = xs.iter().map(|&x| eval(x)).collect();
    let mut ys = word.clone();
    let mut corrupted: Vec<usize> = sample(rng, xs.len(), b).into_vec();
    corrupted.sort_unstable();
    for &i in &corrupted {
        ys[i] = (ys[i] + rng.random_range(1..p)) % p;
    }
    let reference = subset_decode(&xs, &ys, k, b, p);
    if reference.as_ref() != Some(&word) {
        return Err("subset oracle failed to recover the codeword".into());
    }
    let dec = rs_decode(&fp(&xs, m), &fp(&ys, m), k - 1)
        .map_err(|e| e.to_string())?
        .ok_or("no codeword within radius")?;
    let got: Vec<u128> = xs
        .iter()
        .map(|&x| dec.poly.eval(Fp::new(x, m)).value())
        .collect();
    if got != word {
        return Err("miscorrection".into());
    }
    let mut errors = dec.errors.clone();
    errors.sort_unstable();
    if errors != corrupted {
        return Err(format!(
            "error positions {errors:?}, expected {corrupted:?}"
        ));
    }
    Ok(())
}

pub fn rs_decoder() -> Report {
    timed(3, "RS decoder", None, || {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut configs = 0;
        for n in 1..=9 {
            for k in 1..=n {
                for e in 0..=n - k {
                    let b = (n - k - e) / 2;
                    for trial in 0..200 {
                        if let Err(err) = rs_trial(&mut rng, n, k, e, b) {
                            return Outcome::fail(format!(
                                "(n={n}, k={k}, e={e}, b={b}) trial {trial}: {err}"
                            ));
                        }
                    }
                    configs += 1;
                }
            }
        }
        Outcome::new(
            true,
            format!("{configs} (n,k,e,b) cases x 200 corruptions, zero miscorrections"),
        )
    })
}

fn uniform(values: impl IntoIterator<Item = u128>) -> Histogram {
    histogram(values.into_iter().map(|v| vec![v]))
}

fn share_values(dom: &EvaluationDomain, secrets: &[Fp], rand: Fp) -> Vec<u128> {
    let m = dom.modulus();
    let s: Vec<FieldVector> = secrets
        .iter()
        .map(|&x| FieldVector::new(m, vec![x]).expect("one modulus"))
        .collect();
    let r = [FieldVector::new(m, vec![rand]).expect("one modulus")];
    share_with_anchors(&s, &r, dom)
        .expect("anchor count")
        .iter()
        .map(|sh| sh.value.as_slice()[0].value())
        .collect()
}

pub fn privacy() -> Report {
    timed(4, "privacy enumeration", None, || {
        const P: u128 = 31;
        let m = modulus(P);
        let all = || (0..P).map(move |v| Fp::new(v, m));
        let full = uniform(0..P);

        // (i) single shares of Shamir (m = 1) and LCC (m = 2) sharings
        for (n, parts) in [(3, 1), (4, 2)] {
            let dom =
                EvaluationDomain::standard(m, SharingParams::new(n, parts, 1).unwrap()).unwrap();
            let secrets: Vec<Vec<Fp>> = if parts == 1 {
                all().map(|s| vec![s]).collect()
            } else {
                all()
                    .flat_map(|a| [vec![a, Fp::new(3, m)], vec![Fp::new(7, m), a]])
                    .collect()
            };
            for s in &secrets {
                let views: Vec<Vec<u128>> = all().map(|r| share_values(&dom, s, r)).collect();
                for party in 0..n {
                    if uniform(views.iter().map(|v| v[party])) != full {
                        return Outcome::fail(format!(
                            "(i) party {party} share not uniform for m={parts}"
                        ));
                    }
                }
            }
        }

        // (ii) pad broadcast together with a colluder's share of the pad
        let dom = EvaluationDomain::standard(m, SharingParams::new(3, 1, 1).unwrap()).unwrap();
        let pad_view = |u: u128| {
            let u = Fp::new(u, m);
            histogram(all().flat_map(|r| {
                let dom = &dom;
                all().map(move |rho| vec![(u - r).value(), share_values(dom, &[r], rho)[0]])
            }))
        };
        if pad_view(3) != pad_view(20) {
            return Outcome::fail("(ii) pad views differ between secrets");
        }

        // (iii) masked sum of trust scores
        let nonzero = uniform(1..P);
        for s1 in [1, 17, 30] {
            let s1 = Fp::new(s1, m);
            if uniform(all().skip(1).map(|l| (l * s1).value())) != nonzero {
                return Outcome::fail("(iii) lambda * Sigma_1 not uniform on the nonzero elements");
            }
        }

        // Beaver broadcast epsilon = s - gamma with the colluder's gamma share
        let beaver = |s: u128| {
            let s = Fp::new(s, m);
            histogram(all().flat_map(|g| {
                let dom = &dom;
                all().map(move |rho| vec![(s - g).value(), share_values(dom, &[g], rho)[0]])
            }))
        };
        if beaver(2) != beaver(9) {
            return Outcome::fail("Beaver broadcast views differ between secrets");
        }
        Outcome::new(
            true,
            "p=31: shares, pads, lambda*Sigma_1 and Beaver openings match exactly",
        )
    })
}

pub fn mac_forgery() -> Report {
    timed(5, "MAC forgery rate", None, || {
        const P: u128 = 101;
        const TRIALS: u64 = 100_000;
        let m = modulus(P);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut accepted = 0u64;
        for _ in 0..TRIALS {
            let mut auth = MacAuthority::new(m, &mut rng);
            let (share, key) = auth.authenticate(Fp::random(m, &mut rng), &mut rng);
            let forged = Auth {
                value: share.value + Fp::random_nonzero(m, &mut rng),
                tag: share.tag + Fp::random(m, &mut rng),
            };
            if mac_check(&forged, &key, auth.alpha()) {
                accepted += 1;
            }
        }
        let prob = 1.0 / P as f64;
        let expected = TRIALS as f64 * prob;
        let sd = binomial_sd(TRIALS, prob);
        let dev = (accepted as f64 - expected).abs();
        Outcome::new(
            dev <= 3.0 * sd,
            format!(
                "{accepted}/{TRIALS} accepted, expected {expected:.1} +- {:.1}",
                3.0 * sd
            ),
        )
    })
}

pub fn quantizer() -> Report {
    timed(6, "quantizer unbiasedness", None, || {
        const DRAWS: usize = 100_000;
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let mut violations = Vec::new();
        let mut worst: f64 = 0.0;
        for pair in 0..100 {
            let x: f64 = rng.random_range(-1.0..=1.0);
            let q: u64 = rng.random_range(1..=1024);
            let mut sum = 0.0;
            for _ in 0..DRAWS {
                match stochastic_quantize(x, q, &mut rng) {
                    Ok(v) => sum += v,
                    Err(e) => return Outcome::fail(format!("x={x}, q={q}: {e}")),
                }
            }
            let scaled = x * q as f64;
            let frac = scaled - scaled.floor();
            let sd = (frac * (1.0 - frac)).sqrt() / q as f64;
            let bound = sd / (DRAWS as f64).sqrt();
            let dev = (sum / DRAWS as f64 - x).abs();
            if bound > 0.0 {
                worst = worst.max(dev / bound);
            }
            if dev > 3.0 * bound {
                violations.push(pair);
            }
        }
        Outcome::new(
            violations.is_empty(),
            format!(
                "{} violations of 3 sigma over 100 pairs (worst {worst:.2} sigma)",
                violations.len()
            ),
        )
    })
}

pub fn discriminator() -> Report {
    timed(8, "discriminator properties", None, || {
        for step in 1..=1000 {
            let x = step as f64 * 1e-3;
            let (pos, neg) = (h_real(x), h_real(-x));
            if (pos - oracle::h(x)).abs() > 1e-12 || (neg - oracle::h(-x)).abs() > 1e-12 {
                return Outcome::fail(format!("h differs from the decimal oracle at +-{x}"));
            }
            if !(pos > 0.0 && pos > neg.abs()) {
                return Outcome::fail(format!("h({x}) = {pos}, h(-{x}) = {neg}"));
            }
        }
        let (h0, h1) = (h_real(0.0f64), h_real(1.0f64));
        let ok = (h0 - 0.01363545).abs() <= 1e-8 && (h1 - 1.23443578).abs() <= 1e-8;
        Outcome::new(
            ok,
            format!("grid of 1000 holds; h(0) = {h0:.8}, h(1) = {h1:.8}"),
        )
    })
}
