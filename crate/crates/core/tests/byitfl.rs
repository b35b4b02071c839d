use itfl_core::adversary::{DropPoint, Misbehavior, Roles};
use itfl_core::byitfl::{Byitfl, ByitflConfig, RunOptions};
use itfl_core::discriminator::{finalize_update, plaintext_aggregate_exact};
use itfl_core::field::{Fp, PrimeModulus};
use itfl_core::params::{ConfigError, ProtocolParams};
use itfl_core::protocol::{
    quantize_inputs, Exclusion, IterationContext, IterationOutcome, QuantizedInputs,
};
use itfl_core::quantize::{QuantizedUpdate, RealUpdate};
use itfl_core::transcript::{MessageKind, Transcript};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn params(n: usize, b: usize, t: usize, e: usize, m: usize) -> ProtocolParams {
    let p = ProtocolParams::new(n, b, t, e, 4)
        .with_q(8)
        .with_m(m)
        .with_epsilon(0.6);
    let modulus = p.smallest_modulus().unwrap();
    p.with_modulus(modulus)
}

fn engine(p: ProtocolParams) -> Byitfl<f64> {
    Byitfl::new(ByitflConfig::new(p).unwrap()).unwrap()
}

fn updates(n: usize, d: usize, seed: u64) -> (Vec<RealUpdate<f64>>, RealUpdate<f64>) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut v = || RealUpdate::new((0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let u0 = v();
    ((0..n).map(|_| v()).collect(), u0)
}

fn lifted_norm(u: &QuantizedUpdate) -> i128 {
    u.lifts().iter().map(|x| x * x).sum()
}

/// Users the oracle keeps: received, not accused, and inside the norm interval.
fn oracle_included(inputs: &QuantizedInputs, p: &ProtocolParams, skip: &[usize]) -> Vec<usize> {
    let q2 = (p.q * p.q) as f64;
    (0..p.n)
        .filter(|j| !skip.contains(j))
        .filter(|&j| match &inputs.users[j] {
            Some(u) => ((lifted_norm(u) as f64) - q2).abs() < p.epsilon * q2,
            None => false,
        })
        .collect()
}

/// Checks the masked pair against `lambda` times the exact integer sums and
/// the final update against the exact rational ratio.
fn assert_matches_oracle(
    out: &IterationOutcome<f64>,
    eng: &Byitfl<f64>,
    u0: &RealUpdate<f64>,
    skip: &[usize],
) {
    let p = eng.config().params();
    let inc = oracle_included(&out.inputs, p, skip);
    assert_eq!(out.included, inc);
    let users: Vec<QuantizedUpdate> = inc
        .iter()
        .map(|&j| out.inputs.users[j].clone().unwrap())
        .collect();
    let exact = plaintext_aggregate_exact(eng.poly(), &out.inputs.root, &users).unwrap();
    let (s1, s2) = exact.reduce(p.modulus);
    assert_eq!(out.lambda_sigma1, out.lambda * s1);
    assert_eq!(out.lambda_sigma2, s2.scale(out.lambda));
    let nu: Vec<f64> = exact.nu(p.q).unwrap();
    assert_eq!(out.nu, nu);
    assert_eq!(out.update, finalize_update(&nu, u0).update);
}

#[test]
fn clean_runs_match_exact_oracle() {
    let p = params(9, 1, 1, 1, 1);
    let eng = engine(p.clone());
    for seed in 0..20 {
        let (us, u0) = updates(9, 4, seed);
        let mut tr = Transcript::counting(0);
        let out = eng
            .run_iteration(
                IterationContext::new(seed, 0),
                &us,
                &u0,
                &Roles::honest(9),
                &mut tr,
            )
            .unwrap();
        assert!(out.flagged.is_empty());
        assert!(out.excluded.is_empty());
        assert!(!out.lambda.is_zero());
        assert_matches_oracle(&out, &eng, &u0, &[]);
    }
}

#[test]
fn below_resilience_bound_is_rejected() {
    let p = params(9, 1, 1, 1, 1);
    let mut low = p.clone();
    low.n = 8;
    match ByitflConfig::new(low) {
        Err(ConfigError::Resilience { n: 8, required: 9 }) => {}
        other => panic!("unexpected {other:?}"),
    }
    let msg = ConfigError::Resilience { n: 8, required: 9 }.to_string();
    assert!(msg.contains("2b + (tau+2)(m+t-1) + e + 1"));
}

#[test]
fn corrupt_sigma_shares_and_dropout_are_corrected() {
    let p = params(9, 1, 1, 1, 1);
    let eng = engine(p);
    let (us, u0) = updates(9, 4, 3);
    let ctx = IterationContext::new(3, 1);
    let clean = eng
        .run_iteration(
            ctx,
            &us,
            &u0,
            &Roles::honest(9),
            &mut Transcript::counting(1),
        )
        .unwrap();
    for kind in [Misbehavior::CorruptSigmaShares, Misbehavior::CorruptMac] {
        for byz in 0..9 {
            let drop = (byz + 4) % 9;
            let roles = Roles::honest(9)
                .with_misbehavior(&[byz], kind)
                .with_dropouts(&[drop], DropPoint::BeforeResults);
            let out = eng
                .run_iteration(ctx, &us, &u0, &roles, &mut Transcript::counting(1))
                .unwrap();
            assert_eq!(out.update, clean.update);
            assert!(out.flagged.contains(&byz));
        }
    }
}

#[test]
fn invalid_sharing_is_accused_and_removed() {
    let p = params(9, 1, 1, 1, 1);
    let eng = engine(p);
    let (us, u0) = updates(9, 4, 11);
    let roles = Roles::honest(9).with_misbehavior(&[2], Misbehavior::InvalidSharing);
    let out = eng
        .run_iteration(
            IterationContext::new(11, 0),
            &us,
            &u0,
            &roles,
            &mut Transcript::counting(0),
        )
        .unwrap();
    assert_eq!(out.excluded.get(&2), Some(&Exclusion::InvalidSharing));
    assert_matches_oracle(&out, &eng, &u0, &[2]);
}

#[test]
fn unnormalized_update_fails_norm_check() {
    let p = params(9, 1, 1, 1, 1);
    let eng = engine(p);
    let (us, u0) = updates(9, 4, 12);
    let roles = Roles::honest(9).with_misbehavior(&[5], Misbehavior::CorruptNorm { factor: 2.0 });
    let out = eng
        .run_iteration(
            IterationContext::new(12, 0),
            &us,
            &u0,
            &roles,
            &mut Transcript::counting(0),
        )
        .unwrap();
    assert_eq!(out.excluded.get(&5), Some(&Exclusion::NormCheck));
    let lift = lifted_norm(out.inputs.users[5].as_ref().unwrap());
    assert!(lift > 3 * 64, "lift {lift}");
    assert_matches_oracle(&out, &eng, &u0, &[]);
}

#[test]
fn silent_user_is_absent() {
    let p = params(9, 1, 1, 1, 1);
    let eng = engine(p);
    let (us, u0) = updates(9, 4, 13);
    let roles = Roles::honest(9)
        .with_misbehavior(&[0], Misbehavior::SilentDrop)
        .with_dropouts(&[8], DropPoint::BeforeSharing);
    let out = eng
        .run_iteration(
            IterationContext::new(13, 0),
            &us,
            &u0,
            &roles,
            &mut Transcript::counting(0),
        )
        .unwrap();
    assert_eq!(out.excluded.get(&0), Some(&Exclusion::Absent));
    assert_eq!(out.excluded.get(&8), Some(&Exclusion::Absent));
    assert_matches_oracle(&out, &eng, &u0, &[]);
}

#[test]
fn zero_lambda_triggers_one_retry() {
    let p = params(9, 1, 1, 1, 1);
    let eng = engine(p.clone());
    let (us, u0) = updates(9, 4, 14);
    let ctx = IterationContext::new(14, 0);
    let roles = Roles::honest(9);
    let inputs = quantize_inputs(&p, ctx, &us, &u0, &roles).unwrap();
    let opts = RunOptions {
        zero_lambda_attempts: 1,
        ..RunOptions::default()
    };
    let out = eng
        .run_quantized(
            ctx,
            inputs,
            &u0,
            &roles,
            &opts,
            &mut Transcript::counting(0),
        )
        .unwrap();
    assert_eq!(out.lambda_attempts, 2);
    assert!(!out.degenerate);
    assert_matches_oracle(&out, &eng, &u0, &[]);

    let inputs = quantize_inputs(&p, ctx, &us, &u0, &roles).unwrap();
    let always = RunOptions {
        zero_lambda_attempts: 10,
        ..RunOptions::default()
    };
    let out = eng
        .run_quantized(
            ctx,
            inputs,
            &u0,
            &roles,
            &always,
            &mut Transcript::counting(0),
        )
        .unwrap();
    assert_eq!(out.lambda_attempts, 4);
    assert!(out.degenerate);
    assert!(out.update.iter().all(|&x| x == 0.0));
}

#[test]
fn unit_lambdas_without_masking() {
    let p = params(9, 1, 1, 1, 1);
    let eng = engine(p.clone());
    let (us, u0) = updates(9, 4, 15);
    let ctx = IterationContext::new(15, 0);
    let roles = Roles::honest(9);
    let inputs = quantize_inputs(&p, ctx, &us, &u0, &roles).unwrap();
    let opts = RunOptions {
        masking: false,
        lambda_override: Some(vec![Fp::one(p.modulus); 9]),
        ..RunOptions::default()
    };
    let out = eng
        .run_quantized(
            ctx,
            inputs,
            &u0,
            &roles,
            &opts,
            &mut Transcript::counting(0),
        )
        .unwrap();
    assert_eq!(out.lambda, Fp::new(9, p.modulus));
    assert_matches_oracle(&out, &eng, &u0, &[]);
}

#[test]
fn packed_sharing_matches_oracle() {
    // m = 2, t = 1: n >= 2b + 5*2 + e + 1
    let p = params(12, 0, 1, 1, 2);
    let eng = engine(p);
    for seed in 0..5 {
        let (us, u0) = updates(12, 4, 100 + seed);
        let roles = Roles::honest(12).with_dropouts(&[3], DropPoint::BeforeResults);
        let out = eng
            .run_iteration(
                IterationContext::new(seed, 0),
                &us,
                &u0,
                &roles,
                &mut Transcript::counting(0),
            )
            .unwrap();
        assert_matches_oracle(&out, &eng, &u0, &[]);
    }
}

#[test]
fn packed_decoder_corrects_one_error() {
    let p = params(13, 1, 1, 0, 2);
    let eng = engine(p);
    let (us, u0) = updates(13, 4, 200);
    let ctx = IterationContext::new(200, 0);
    let clean = eng
        .run_iteration(
            ctx,
            &us,
            &u0,
            &Roles::honest(13),
            &mut Transcript::counting(0),
        )
        .unwrap();
    let roles = Roles::honest(13).with_misbehavior(&[7], Misbehavior::CorruptSigmaShares);
    let out = eng
        .run_iteration(ctx, &us, &u0, &roles, &mut Transcript::counting(0))
        .unwrap();
    assert_eq!(out.update, clean.update);
    assert_eq!(out.flagged.iter().copied().collect::<Vec<_>>(), vec![7]);
}

#[test]
fn message_counts_follow_closed_form() {
    let n = 9usize;
    let p = params(n, 1, 1, 1, 1);
    let eng = engine(p);
    let (us, u0) = updates(n, 4, 16);
    let mut tr = Transcript::recording(0, false);
    eng.run_iteration(
        IterationContext::new(16, 0),
        &us,
        &u0,
        &Roles::honest(n),
        &mut tr,
    )
    .unwrap();
    let nn = (n * n) as u64;
    assert_eq!(tr.tally(MessageKind::RootBroadcast).messages, n as u64);
    assert_eq!(tr.tally(MessageKind::UpdateSharing).messages, nn);
    assert_eq!(
        tr.tally(MessageKind::UpdateSharing).elements,
        nn * 2 * n as u64 * 4
    );
    assert_eq!(tr.tally(MessageKind::LambdaSharing).messages, nn);
    assert_eq!(
        tr.tally(MessageKind::Consistency).messages,
        2 * n as u64 * nn - 2 * nn
    );
    assert_eq!(tr.tally(MessageKind::NormMask).messages, nn);
    assert_eq!(tr.tally(MessageKind::NormShare).messages, n as u64);
    assert_eq!(tr.tally(MessageKind::SigmaMask).messages, nn);
    assert_eq!(tr.tally(MessageKind::SigmaShare).messages, n as u64);
    assert_eq!(tr.tally(MessageKind::SigmaShare).elements, n as u64 * 5);
    assert_eq!(
        tr.received_by(0).count() as u64,
        1 + 2 * n as u64 + 2 * (n as u64 * (n as u64 - 1)) + n as u64 + 1 + n as u64
    );
}

#[test]
fn same_seed_is_deterministic() {
    let p = params(9, 1, 1, 1, 1);
    let eng = engine(p);
    let (us, u0) = updates(9, 4, 17);
    let run = || {
        eng.run_iteration(
            IterationContext::new(17, 2),
            &us,
            &u0,
            &Roles::honest(9),
            &mut Transcript::counting(2),
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.lambda_sigma2, b.lambda_sigma2);
    assert_eq!(a.update, b.update);
}

#[test]
fn modulus_choice_for_small_parameters() {
    let p = params(9, 1, 1, 1, 1);
    assert!(p.modulus.value() > PrimeModulus::MERSENNE_61);
    assert!(p.modulus.bits() < 100);
}
