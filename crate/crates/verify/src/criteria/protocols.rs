use std::collections::BTreeSet;

use itfl_core::adversary::{DropPoint, Misbehavior, Roles};
use itfl_core::byitfl::{Byitfl, ByitflConfig};
use itfl_core::discriminator::{finalize_update, plaintext_aggregate_exact, DiscriminatorPoly};
use itfl_core::lobyitfl::{Lobyitfl, LobyitflConfig};
use itfl_core::params::{ConfigError, ProtocolParams};
use itfl_core::protocol::{Exclusion, IterationContext, IterationOutcome, ProtocolError};
use itfl_core::quantize::{QuantizedUpdate, RealUpdate};
use itfl_core::transcript::Transcript;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{timed, Outcome, Report};
use crate::oracle::{
    exact_sums, fixed_point_coeffs, honest_norm_epsilon, mul, norm_accepts, reduce,
};

const D: usize = 4;
const Q: u64 = 8;

/// Small-field parameters with the honest norm tolerance.
fn small(n: usize, b: usize, t: usize, e: usize) -> ProtocolParams {
    let p = ProtocolParams::new(n, b, t, e, D)
        .with_q(Q)
        .with_epsilon(honest_norm_epsilon(Q, D));
    let modulus = p.smallest_modulus().expect("valid parameters");
    p.with_modulus(modulus)
}

fn updates(n: usize, seed: u64) -> (Vec<RealUpdate<f64>>, RealUpdate<f64>) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed);
    let mut v =
        || RealUpdate::new((0..D).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("finite");
    let u0 = v();
    ((0..n).map(|_| v()).collect(), u0)
}

enum Engine {
    By(Byitfl<f64>),
    Lo(Lobyitfl<f64>),
}

impl Engine {
    fn byitfl(p: ProtocolParams) -> Result<Self, String> {
        let cfg = ByitflConfig::new(p).map_err(|e| e.to_string())?;
        Byitfl::new(cfg).map(Engine::By).map_err(|e| e.to_string())
    }

    fn lobyitfl(p: ProtocolParams) -> Result<Self, String> {
        let cfg = LobyitflConfig::new(p).map_err(|e| e.to_string())?;
        Lobyitfl::new(cfg)
            .map(Engine::Lo)
            .map_err(|e| e.to_string())
    }

    fn params(&self) -> &ProtocolParams {
        match self {
            Engine::By(e) => e.config().params(),
            Engine::Lo(e) => e.params(),
        }
    }

    fn poly(&self) -> &DiscriminatorPoly<f64> {
        match self {
            Engine::By(e) => e.poly(),
            Engine::Lo(e) => e.poly(),
        }
    }

    fn run(&self, seed: u64, roles: &Roles) -> Result<IterationOutcome<f64>, ProtocolError> {
        let n = self.params().n;
        let (us, u0) = updates(n, seed);
        let ctx = IterationContext::new(seed, 0);
        let mut tr = Transcript::counting(0);
        match self {
            Engine::By(e) => e.run_iteration(ctx, &us, &u0, roles, &mut tr),
            Engine::Lo(e) => {
                let mut mat = e.generate_material(ctx);
                e.run_iteration(ctx, &us, &u0, roles, &mut mat, &mut tr)
            }
        }
    }
}

/// Checks the masked pair against the independent integer sums over the
/// users the oracle keeps (present, not in `removed`, inside the norm
/// interval).
fn check_exact(out: &IterationOutcome<f64>, eng: &Engine, removed: &[usize]) -> Result<(), String> {
    let p = eng.params();
    let coeffs = fixed_point_coeffs(p.q, p.coeff_scale);
    if coeffs != eng.poly().int_coeffs() {
        return Err(format!(
            "fixed-point coefficients {:?} != {coeffs:?}",
            eng.poly().int_coeffs()
        ));
    }
    let keep: Vec<usize> = (0..p.n)
        .filter(|j| !removed.contains(j))
        .filter(|&j| {
            out.inputs.users[j]
                .as_ref()
                .is_some_and(|u| norm_accepts(&u.lifts(), p.q, p.epsilon))
        })
        .collect();
    if out.included != keep {
        return Err(format!(
            "included {:?}, oracle keeps {keep:?}",
            out.included
        ));
    }
    let users: Vec<Vec<i128>> = keep
        .iter()
        .map(|&j| out.inputs.users[j].as_ref().unwrap().lifts())
        .collect();
    let sums = exact_sums(&coeffs, &out.inputs.root.lifts(), &users);
    let m = p.modulus.value();
    let lambda = out.lambda.value();
    if out.lambda_sigma1.value() != mul(lambda, reduce(sums.sigma1, m), m) {
        return Err("lambda * Sigma_1 differs from the oracle".into());
    }
    for (k, (got, &want)) in out.lambda_sigma2.iter().zip(&sums.sigma2).enumerate() {
        if got.value() != mul(lambda, reduce(want, m), m) {
            return Err(format!("lambda * Sigma_2[{k}] differs from the oracle"));
        }
    }
    Ok(())
}

/// Final update over the kept users through the plaintext exact path.
fn expected_update(
    out: &IterationOutcome<f64>,
    eng: &Engine,
    u0: &RealUpdate<f64>,
) -> Result<Vec<f64>, String> {
    let users: Vec<QuantizedUpdate> = out
        .included
        .iter()
        .map(|&j| {
            out.inputs.users[j]
                .clone()
                .expect("included users are present")
        })
        .collect();
    let exact = plaintext_aggregate_exact(eng.poly(), &out.inputs.root, &users)
        .map_err(|e| e.to_string())?;
    let nu: Vec<f64> = exact.nu(eng.params().q).map_err(|e| e.to_string())?;
    Ok(finalize_update(&nu, u0).update)
}

pub fn oracle_equivalence() -> Report {
    timed(1, "oracle equivalence (exact)", Some(60.0), || {
        let mut runs = 0;
        for (label, eng) in [
            ("byitfl(9,1,1,1)", Engine::byitfl(small(9, 1, 1, 1))),
            ("lobyitfl(8,2,2,1)", Engine::lobyitfl(small(8, 2, 2, 1))),
        ] {
            let eng = match eng {
                Ok(e) => e,
                Err(e) => return Outcome::fail(format!("{label}: {e}")),
            };
            let n = eng.params().n;
            for seed in 0..50 {
                let out = match eng.run(seed, &Roles::honest(n)) {
                    Ok(o) => o,
                    Err(e) => return Outcome::fail(format!("{label} seed {seed}: {e}")),
                };
                if let Err(e) = check_exact(&out, &eng, &[]) {
                    return Outcome::fail(format!("{label} seed {seed}: {e}"));
                }
                let (_, u0) = updates(n, seed);
                match expected_update(&out, &eng, &u0) {
                    Ok(u) if u == out.update => {}
                    Ok(_) => {
                        return Outcome::fail(format!("{label} seed {seed}: final update differs"))
                    }
                    Err(e) => return Outcome::fail(format!("{label} seed {seed}: {e}")),
                }
                runs += 1;
            }
        }
        Outcome::new(
            true,
            format!("{runs} runs bit-exact against integer sums mod p"),
        )
    })
}

fn random_subset(rng: &mut ChaCha20Rng, from: &[usize], k: usize) -> Vec<usize> {
    sample(rng, from.len(), k)
        .into_iter()
        .map(|i| from[i])
        .collect()
}

/// Runs 100 patterns of `b` corrupt users and `e` dropouts; each must
/// reproduce the dropout-only run and flag every corrupt user.
fn patterns(eng: &Engine, kinds: &[Misbehavior], seed: u64) -> Result<(), String> {
    let p = eng.params().clone();
    let all: Vec<usize> = (0..p.n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for pattern in 0..100u64 {
        let byz = random_subset(&mut rng, &all, p.b);
        let rest: Vec<usize> = all.iter().copied().filter(|i| !byz.contains(i)).collect();
        let drops = random_subset(&mut rng, &rest, p.e);
        let point = if pattern % 2 == 0 {
            DropPoint::BeforeResults
        } else {
            DropPoint::BeforeSharing
        };
        let kind = kinds[pattern as usize % kinds.len()];
        let base_roles = Roles::honest(p.n).with_dropouts(&drops, point);
        let roles = base_roles.clone().with_misbehavior(&byz, kind);
        let run_seed = seed * 1000 + pattern;
        let base = eng
            .run(run_seed, &base_roles)
            .map_err(|e| format!("baseline {pattern}: {e}"))?;
        let out = eng.run(run_seed, &roles).map_err(|e| {
            format!(
                "pattern {pattern} ({} by {byz:?}, drops {drops:?}): {e}",
                kind.name()
            )
        })?;
        if out.update != base.update {
            return Err(format!("pattern {pattern}: output changed"));
        }
        if !byz.iter().all(|j| out.flagged.contains(j)) {
            return Err(format!(
                "pattern {pattern}: corrupt users {byz:?} not all flagged"
            ));
        }
    }
    Ok(())
}

pub fn threshold() -> Report {
    timed(2, "threshold sharpness", None, || {
        let byz_kinds = [Misbehavior::CorruptSigmaShares, Misbehavior::CorruptMac];
        let mut checked = Vec::new();
        for (b, t, e) in [(1, 1, 1), (2, 1, 1)] {
            let probe = small(1, b, t, e);
            let n = probe.byitfl_min_users();
            let p = small(n, b, t, e);
            let eng = match Engine::byitfl(p.clone()) {
                Ok(e) => e,
                Err(err) => return Outcome::fail(format!("byitfl n={n}: {err}")),
            };
            if let Err(err) = patterns(&eng, &byz_kinds, n as u64) {
                return Outcome::fail(format!("byitfl n={n}: {err}"));
            }
            let mut below = p;
            below.n = n - 1;
            if !matches!(
                ByitflConfig::new(below),
                Err(ConfigError::Resilience { .. })
            ) {
                return Outcome::fail(format!("byitfl accepted n={}", n - 1));
            }
            checked.push(format!("byitfl n={n}"));
        }
        for (b, t, e) in [(1, 1, 1), (2, 2, 1)] {
            let n = b + 1 + t + e;
            let p = small(n, b, t, e);
            let eng = match Engine::lobyitfl(p.clone()) {
                Ok(e) => e,
                Err(err) => return Outcome::fail(format!("lobyitfl n={n}: {err}")),
            };
            if let Err(err) = patterns(&eng, &[Misbehavior::CorruptMac], 100 + n as u64) {
                return Outcome::fail(format!("lobyitfl n={n}: {err}"));
            }
            let mut below = p;
            below.n = n - 1;
            if !matches!(
                LobyitflConfig::new(below),
                Err(ConfigError::LowCostResilience { .. })
            ) {
                return Outcome::fail(format!("lobyitfl accepted n={}", n - 1));
            }
            checked.push(format!("lobyitfl n={n}"));
        }
        Outcome::new(
            true,
            format!(
                "{} x 100 patterns succeed, n-1 rejected each",
                checked.join(", ")
            ),
        )
    })
}

pub fn accounting() -> Report {
    timed(7, "triple/randomness accounting", None, || {
        let tau = 3;
        for n in 4..=8 {
            let expect = [n, (tau - 1) * n + 1, n + 1, n, 1];
            let p = small(n, 1, 1, 0);
            let Engine::Lo(eng) = (match Engine::lobyitfl(p) {
                Ok(e) => e,
                Err(err) => return Outcome::fail(format!("n={n}: {err}")),
            }) else {
                unreachable!()
            };
            for roles in [
                Roles::honest(n),
                Roles::honest(n).with_misbehavior(&[0], Misbehavior::CorruptMac),
            ] {
                let (us, u0) = updates(n, n as u64);
                let ctx = IterationContext::new(n as u64, 0);
                let mut mat = eng.generate_material(ctx);
                if let Err(e) = eng.run_iteration(
                    ctx,
                    &us,
                    &u0,
                    &roles,
                    &mut mat,
                    &mut Transcript::counting(0),
                ) {
                    return Outcome::fail(format!("n={n}: {e}"));
                }
                let c = mat.consumed();
                let got = [c.dot, c.scalar, c.scalar_vector, c.random_vectors, c.lambda];
                if got != expect {
                    return Outcome::fail(format!("n={n}: consumed {got:?}, expected {expect:?}"));
                }
            }
        }
        Outcome::new(true, "(n, 2n+1, n+1, n, 1) consumed for n = 4..8, tau = 3")
    })
}

/// Users the defense legitimately removes for each misbehavior.
fn removes(kind: Misbehavior, byitfl: bool) -> Option<Exclusion> {
    match kind {
        Misbehavior::InvalidSharing if byitfl => Some(Exclusion::InvalidSharing),
        Misbehavior::CorruptNorm { .. } => Some(Exclusion::NormCheck),
        Misbehavior::SilentDrop => Some(Exclusion::Absent),
        _ => None,
    }
}

fn coverage(eng: &Engine, byitfl: bool) -> Result<usize, String> {
    let p = eng.params().clone();
    let all: Vec<usize> = (0..p.n).collect();
    let mut runs = 0;
    for kind in Misbehavior::ALL {
        for seed in 0..100u64 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed + 7);
            let byz = random_subset(&mut rng, &all, p.b);
            let rest: Vec<usize> = all.iter().copied().filter(|i| !byz.contains(i)).collect();
            let drops = random_subset(&mut rng, &rest, p.e);
            let base_roles = Roles::honest(p.n).with_dropouts(&drops, DropPoint::BeforeResults);
            let roles = base_roles.clone().with_misbehavior(&byz, kind);
            let ctx = format!("{} seed {seed}", kind.name());
            let clean = eng
                .run(seed, &base_roles)
                .map_err(|e| format!("{ctx} clean: {e}"))?;
            let out = eng.run(seed, &roles).map_err(|e| format!("{ctx}: {e}"))?;
            match removes(kind, byitfl) {
                None => {
                    if out.update != clean.update {
                        return Err(format!("{ctx}: output differs from the clean run"));
                    }
                    if !byz.iter().all(|j| out.flagged.contains(j)) {
                        return Err(format!("{ctx}: misbehavior not detected"));
                    }
                }
                Some(reason) => {
                    let excluded: BTreeSet<usize> = out
                        .excluded
                        .iter()
                        .filter(|(_, r)| **r == reason)
                        .map(|(j, _)| *j)
                        .collect();
                    if !byz.iter().all(|j| excluded.contains(j)) {
                        return Err(format!("{ctx}: {byz:?} not excluded as {reason:?}"));
                    }
                    let (_, u0) = updates(p.n, seed);
                    let mut reference = clean.clone();
                    reference.included.retain(|j| !byz.contains(j));
                    if out.update != expected_update(&reference, eng, &u0)? {
                        return Err(format!(
                            "{ctx}: output differs from the clean run without {byz:?}"
                        ));
                    }
                }
            }
            check_exact(&out, eng, &byz_removed(kind, byitfl, &byz))
                .map_err(|e| format!("{ctx}: {e}"))?;
            runs += 1;
        }
    }
    Ok(runs)
}

fn byz_removed(kind: Misbehavior, byitfl: bool, byz: &[usize]) -> Vec<usize> {
    if removes(kind, byitfl).is_some() {
        byz.to_vec()
    } else {
        Vec::new()
    }
}

pub fn defense_coverage() -> Report {
    timed(11, "defense coverage", None, || {
        let mut total = 0;
        for (label, eng, byitfl) in [
            ("byitfl(9,1,1,1)", Engine::byitfl(small(9, 1, 1, 1)), true),
            (
                "lobyitfl(8,2,2,1)",
                Engine::lobyitfl(small(8, 2, 2, 1)),
                false,
            ),
        ] {
            let eng = match eng {
                Ok(e) => e,
                Err(e) => return Outcome::fail(format!("{label}: {e}")),
            };
            match coverage(&eng, byitfl) {
                Ok(n) => total += n,
                Err(e) => return Outcome::fail(format!("{label}: {e}")),
            }
        }
        Outcome::new(
            true,
            format!("5 kinds x 2 protocols x 100 seeds = {total} runs, zero deviations"),
        )
    })
}
