use itfl_core::adversary::{AttackPlan, DropPoint, DropoutSchedule, Misbehavior, UpdateAttack};
use itfl_core::config::ExperimentConfig;
use itfl_core::flsim::{centralized_accuracy, run_experiment, run_seeds, Aggregator, TaskKind};

use super::{timed, Outcome, Report};

/// Quantization levels for protocol training runs; the default 1024 breaks
/// the ratio-recovery bound at this dimension.
pub const TRAIN_Q: u64 = 64;
/// Norm tolerance matching `TRAIN_Q`.
pub const TRAIN_EPSILON: f64 = 0.2;

pub fn training_config(aggregator: Aggregator, n: usize, b: usize, e: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(TaskKind::SyntheticLogreg, aggregator);
    cfg.protocol.n = n;
    cfg.protocol.b = b;
    cfg.protocol.e = e;
    cfg.protocol.q = TRAIN_Q;
    cfg.protocol.epsilon = TRAIN_EPSILON;
    cfg
}

fn attack_catalogue(d: usize) -> Vec<(String, AttackPlan)> {
    let base = AttackPlan {
        byzantine: vec![0],
        dropouts: DropoutSchedule::Random {
            count: 1,
            point: DropPoint::BeforeResults,
        },
        ..AttackPlan::none()
    };
    let updates = [
        UpdateAttack::SignFlip,
        UpdateAttack::Scale { factor: 10.0 },
        UpdateAttack::RandomNoise { sigma: 1.0 },
        UpdateAttack::AlieLike { z: 1.5 },
        UpdateAttack::TargetedShift {
            shift: vec![0.5; d],
        },
    ];
    let mut plans: Vec<(String, AttackPlan)> = updates
        .into_iter()
        .map(|a| {
            let name = format!("{a:?}");
            let plan = AttackPlan {
                update_attacks: vec![a],
                ..base.clone()
            };
            (name, plan)
        })
        .collect();
    for kind in Misbehavior::ALL {
        plans.push((
            kind.name().to_string(),
            AttackPlan {
                misbehavior: Some(kind),
                ..base.clone()
            },
        ));
    }
    plans
}

pub fn descent_monitor() -> Report {
    timed(9, "descent-condition monitor", None, || {
        let mut iterations = 0;
        let mut min_margin = f64::INFINITY;
        for agg in [Aggregator::Byitfl, Aggregator::Lobyitfl] {
            let mut cfg = training_config(agg, 9, 1, 1);
            cfg.train.iterations = 30;
            for (name, plan) in attack_catalogue(cfg.task.model_dim()) {
                cfg.attack = plan;
                let out = match run_experiment::<f64>(&cfg, 9) {
                    Ok(o) => o,
                    Err(e) => return Outcome::fail(format!("{} {name}: {e}", agg.name())),
                };
                for row in &out.metrics {
                    min_margin = min_margin.min(row.slack - row.slack_floor);
                    if !row.descent_holds() {
                        return Outcome::fail(format!(
                            "{} {name} iteration {}: slack {} below {}",
                            agg.name(),
                            row.iteration,
                            row.slack,
                            row.slack_floor
                        ));
                    }
                }
                iterations += out.metrics.len();
            }
        }
        Outcome::new(
            iterations >= 500,
            format!("{iterations} protocol iterations over 10 attacks, min margin {min_margin:.4}"),
        )
    })
}

fn mean_final_accuracy(cfg: &ExperimentConfig) -> Result<f64, String> {
    let runs = run_seeds::<f64>(cfg);
    let mut total = 0.0;
    for r in &runs {
        total += r
            .as_ref()
            .map_err(|e| e.to_string())?
            .summary
            .final_accuracy;
    }
    Ok(total / runs.len() as f64)
}

pub fn convergence() -> Report {
    timed(10, "desk-scale convergence", Some(600.0), || {
        let attack = AttackPlan {
            byzantine: (0..5).collect(),
            update_attacks: vec![UpdateAttack::SignFlip, UpdateAttack::Scale { factor: 10.0 }],
            ..AttackPlan::none()
        };
        let mut parts = Vec::new();
        let mut passed = true;
        for agg in [Aggregator::Byitfl, Aggregator::Lobyitfl, Aggregator::FedAvg] {
            let mut cfg = training_config(agg, 20, 5, 0);
            cfg.train.iterations = 100;
            cfg.seeds = (0..5).collect();
            let clean = match mean_final_accuracy(&cfg) {
                Ok(a) => a,
                Err(e) => return Outcome::fail(format!("{} clean: {e}", agg.name())),
            };
            cfg.attack = attack.clone();
            let attacked = match mean_final_accuracy(&cfg) {
                Ok(a) => a,
                Err(e) => return Outcome::fail(format!("{} attacked: {e}", agg.name())),
            };
            let ok = if agg == Aggregator::FedAvg {
                clean - attacked >= 0.20
            } else {
                (clean - attacked).abs() <= 0.05
            };
            passed &= ok;
            parts.push(format!("{} {:.3} -> {:.3}", agg.name(), clean, attacked));
        }
        let mut cfg = training_config(Aggregator::FedAvg, 20, 5, 0);
        cfg.train.iterations = 100;
        let central: f64 = (0..5)
            .map(|s| centralized_accuracy::<f64>(&cfg, s))
            .sum::<f64>()
            / 5.0;
        parts.push(format!("centralized {central:.3}"));
        Outcome::new(passed, parts.join(", "))
    })
}
