use std::path::Path;

use itfl_core::adversary::{AttackPlan, UpdateAttack};
use itfl_core::config::{ExperimentConfig, ExperimentConfigError};
use itfl_core::flsim::{
    descent_slack, local_train, run_experiment, write_csv, Aggregator, Dataset, Loss, Simulation,
    Task, TaskConfig, TaskKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn random_dataset(
    rng: &mut ChaCha20Rng,
    rows: usize,
    features: usize,
    binary: bool,
) -> Dataset<f64> {
    let x = (0..rows)
        .map(|_| (0..features).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let y = (0..rows)
        .map(|_| {
            if binary {
                rng.random_range(0..2) as f64
            } else {
                rng.random_range(-2.0..2.0)
            }
        })
        .collect();
    Dataset { x, y }
}

fn subset(data: &Dataset<f64>, idx: &[usize]) -> Dataset<f64> {
    Dataset {
        x: idx.iter().map(|&i| data.x[i].clone()).collect(),
        y: idx.iter().map(|&i| data.y[i]).collect(),
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let h = 1e-5;
    for case in 0..100 {
        let (loss, binary) = if case % 2 == 0 {
            (Loss::Logistic, true)
        } else {
            (Loss::Squared, false)
        };
        let data = random_dataset(&mut rng, 40, 5, binary);
        let batch: Vec<usize> = (0..rng.random_range(1..=40))
            .map(|_| rng.random_range(0..40))
            .collect();
        let w: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = loss.gradient_on(&w, &data, &batch);
        let sub = subset(&data, &batch);
        let fd: Vec<f64> = (0..w.len())
            .map(|k| {
                let mut a = w.clone();
                let mut b = w.clone();
                a[k] += h;
                b[k] -= h;
                (loss.mean_loss(&a, &sub) - loss.mean_loss(&b, &sub)) / (2.0 * h)
            })
            .collect();
        let diff: f64 = g
            .iter()
            .zip(&fd)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = fd.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
        assert!(
            diff / scale < 1e-5,
            "case {case}: relative error {}",
            diff / scale
        );
    }
}

#[test]
fn one_full_batch_step_is_a_gradient_step() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let data = random_dataset(&mut rng, 30, 4, false);
    let w = vec![0.0; 5];
    let lr = 0.3;
    let u = local_train(Loss::Squared, &w, &data, lr, 1, 0, &mut rng);
    let g = Loss::Squared.gradient(&w, &data);
    let expect: Vec<f64> = g.iter().map(|x| -lr * x).collect();
    assert_eq!(u.values(), expect.as_slice());
}

#[test]
fn zero_rate_gives_zero_update() {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let data = random_dataset(&mut rng, 30, 4, true);
    let w = vec![0.4, -0.1, 0.2, 0.0, 1.0];
    let u = local_train(Loss::Logistic, &w, &data, 0.0, 5, 8, &mut rng);
    assert!(u.values().iter().all(|&x| x == 0.0));
}

#[test]
fn descent_slack_for_the_root_update() {
    let u0 = [0.5, -1.0, 2.0];
    let g = [0.1, 0.3, -0.2];
    let dist: f64 = u0
        .iter()
        .zip(&g)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let gn: f64 = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let s = descent_slack(&u0, &u0, &g);
    assert!((s - (2.0 * dist + 2.0 * gn)).abs() < 1e-12);
    assert!(s >= 0.0);
}

#[test]
fn root_data_comes_from_the_user_distribution() {
    let mut cfg = TaskConfig::new(TaskKind::TwoCluster);
    cfg.root_samples = 2000;
    cfg.samples_per_user = 200;
    let task: Task<f64> = Task::generate(&cfg, 10, 3);
    let mean = |d: &Dataset<f64>| d.y.iter().sum::<f64>() / d.len() as f64;
    assert_eq!(task.root.len(), 2000);
    assert_eq!(task.users.len(), 10);
    assert!((mean(&task.root) - mean(&task.union())).abs() < 0.05);
}

fn csv_bytes(cfg: &ExperimentConfig, seed: u64) -> Vec<u8> {
    let out = run_experiment::<f64>(cfg, seed).unwrap();
    let mut buf = Vec::new();
    write_csv(&out.metrics, &mut buf).unwrap();
    buf
}

#[test]
fn same_seed_gives_identical_csv() {
    for agg in Aggregator::ALL {
        let mut cfg = ExperimentConfig::new(TaskKind::SyntheticLogreg, agg);
        cfg.protocol.n = 9;
        cfg.protocol.b = 1;
        cfg.protocol.q = 16;
        cfg.train.iterations = 4;
        let a = csv_bytes(&cfg, 21);
        assert_eq!(a, csv_bytes(&cfg, 21), "{}", agg.name());
        assert_ne!(a, csv_bytes(&cfg, 22), "{}", agg.name());
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().count(), 5);
    }
}

#[test]
fn config_round_trip_and_defaults() {
    let text = "task = \"synthetic_logreg\"\naggregator = \"fltrust_h_plain\"\n";
    let cfg = ExperimentConfig::from_toml(text, Path::new("mem.toml")).unwrap();
    assert_eq!(cfg.protocol.q, 1024);
    assert_eq!(cfg.protocol.epsilon, 0.02);
    assert_eq!(cfg.task.root_samples, 100);
    let back = ExperimentConfig::from_toml(&cfg.to_toml(), Path::new("mem.toml")).unwrap();
    assert_eq!(cfg, back);
}

#[test]
fn byitfl_below_bound_names_the_inequality() {
    let text = "task = \"synthetic_logreg\"\naggregator = \"byitfl\"\n[protocol]\nn = 8\nb = 1\nt = 1\ne = 1\n";
    let err = ExperimentConfig::from_toml(text, Path::new("mem.toml")).unwrap_err();
    assert!(matches!(err, ExperimentConfigError::Protocol(_)));
    let msg = err.to_string();
    assert!(msg.contains("n >= 2b + (tau+2)(m+t-1) + e + 1"), "{msg}");
    assert!(msg.contains('9'), "{msg}");
}

#[test]
fn parse_errors_carry_the_line() {
    let text = "task = \"synthetic_logreg\"\naggregator = = 3\n";
    let msg = ExperimentConfig::from_toml(text, Path::new("bad.toml"))
        .unwrap_err()
        .to_string();
    assert!(msg.contains("bad.toml") && msg.contains("line 2"), "{msg}");
}

/// The private aggregate differs from the real-valued one only through
/// quantization: from a common model, at most 3/q relative per iteration.
#[test]
fn byitfl_tracks_plain_aggregation() {
    let mut cfg = ExperimentConfig::new(TaskKind::SyntheticLogreg, Aggregator::FltrustHPlain);
    cfg.protocol.n = 9;
    cfg.protocol.b = 1;
    cfg.protocol.q = 64;
    cfg.protocol.epsilon = 0.2;
    cfg.train.iterations = 10;
    let mut plain = Simulation::<f64>::new(&cfg, 4).unwrap();
    cfg.aggregator = Aggregator::Byitfl;
    let mut private = Simulation::<f64>::new(&cfg, 4).unwrap();
    let q = cfg.protocol.q as f64;
    let eta = cfg.train.lr;
    let mut gap = 0.0;
    for _ in 0..cfg.train.iterations {
        let w0 = plain.model().to_vec();
        private.set_model(&w0);
        plain.step().unwrap();
        let m = private.step().unwrap();
        assert_eq!(m.excluded, 0);
        let step = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| (x - y) / eta).collect()
        };
        let (up, ub) = (step(&w0, plain.model()), step(&w0, private.model()));
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = up.iter().zip(&ub).map(|(a, b)| a - b).collect();
        gap = f64::max(gap, norm(&diff) / norm(&up));
    }
    assert!(gap <= 3.0 / q, "relative gap {gap}");
}

#[test]
fn sign_flip_hurts_fedavg_only() {
    let mut cfg = ExperimentConfig::new(TaskKind::SyntheticLogreg, Aggregator::FedAvg);
    cfg.protocol.n = 20;
    cfg.train.iterations = 40;
    let clean = run_experiment::<f64>(&cfg, 1).unwrap().summary;
    cfg.protocol.b = 5;
    cfg.attack = AttackPlan {
        byzantine: (0..5).collect(),
        update_attacks: vec![UpdateAttack::SignFlip, UpdateAttack::Scale { factor: 10.0 }],
        ..AttackPlan::none()
    };
    let attacked = run_experiment::<f64>(&cfg, 1).unwrap().summary;
    assert!(attacked.final_loss > clean.final_loss);
    cfg.aggregator = Aggregator::FltrustHPlain;
    let robust = run_experiment::<f64>(&cfg, 1).unwrap().summary;
    assert!(robust.final_accuracy > attacked.final_accuracy + 0.2);
}

#[test]
fn f32_runs_track_f64() {
    let mut cfg = ExperimentConfig::new(TaskKind::SyntheticLinreg, Aggregator::FltrustHPlain);
    cfg.protocol.n = 6;
    cfg.train.iterations = 20;
    let a = run_experiment::<f64>(&cfg, 2)
        .unwrap()
        .summary
        .final_accuracy;
    let b = run_experiment::<f32>(&cfg, 2)
        .unwrap()
        .summary
        .final_accuracy;
    assert!((a - b).abs() < 1e-3, "{a} vs {b}");
}
