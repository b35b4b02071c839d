use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn itfl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itfl"))
        .current_dir(dir)
        .env_remove("ITFL_WORKERS")
        .args(args)
        .output()
        .expect("spawn itfl")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[track_caller]
fn ok(o: Output) -> Output {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        stderr(&o)
    );
    o
}

#[test]
fn training_past_the_provisioned_session_is_exhaustion() {
    let tmp = TempDir::new().unwrap();
    ok(itfl(
        tmp.path(),
        &[
            "init",
            "--seed",
            "0",
            "--iterations",
            "3",
            "--session",
            "s.itfl",
        ],
    ));
    let o = itfl(
        tmp.path(),
        &[
            "train",
            "--seed",
            "0",
            "--iterations",
            "4",
            "--session",
            "s.itfl",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("insufficient provisioned iterations"),
        "{}",
        stderr(&o)
    );
    assert!(!tmp.path().join("out/lobyitfl_seed0.csv").exists());
}

#[test]
fn session_run_matches_on_the_fly_material() {
    let tmp = TempDir::new().unwrap();
    let base = ["--seed", "4", "--iterations", "3"];
    ok(itfl(
        tmp.path(),
        &[&["init"][..], &base, &["--out", "a"]].concat(),
    ));
    ok(itfl(
        tmp.path(),
        &[
            &["train"][..],
            &base,
            &["--out", "a", "--session", "a/session.itfl"],
        ]
        .concat(),
    ));
    ok(itfl(
        tmp.path(),
        &[&["train"][..], &base, &["--out", "b"]].concat(),
    ));
    let a = fs::read(tmp.path().join("a/lobyitfl_seed4.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/lobyitfl_seed4.csv")).unwrap();
    assert_eq!(a, b);
    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("a/lobyitfl_seed4.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["iterations"], 3);
    assert_eq!(summary["descent_violations"], 0);
}

#[test]
fn same_seed_gives_byte_identical_csv() {
    let tmp = TempDir::new().unwrap();
    for out in ["x", "y"] {
        ok(itfl(
            tmp.path(),
            &[
                "train",
                "--iterations",
                "4",
                "--aggregator",
                "fltrust_h_plain",
                "--out",
                out,
            ],
        ));
    }
    for seed in 0..3 {
        let name = format!("fltrust_h_plain_seed{seed}.csv");
        let x = fs::read(tmp.path().join("x").join(&name)).unwrap();
        let y = fs::read(tmp.path().join("y").join(&name)).unwrap();
        assert_eq!(x, y, "{name}");
        assert_eq!(String::from_utf8(x).unwrap().lines().count(), 5);
    }
}

#[test]
fn session_for_another_configuration_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    ok(itfl(
        tmp.path(),
        &[
            "init",
            "--seed",
            "0",
            "--iterations",
            "2",
            "--session",
            "s.itfl",
        ],
    ));
    let cfg = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.toml"))
        .unwrap()
        .replace("epsilon = 0.2", "epsilon = 0.25");
    fs::write(tmp.path().join("other.toml"), cfg).unwrap();
    let o = itfl(
        tmp.path(),
        &[
            "train",
            "--config",
            "other.toml",
            "--seed",
            "0",
            "--iterations",
            "2",
            "--session",
            "s.itfl",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("different configuration"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn missing_session_file_is_a_run_failure() {
    let tmp = TempDir::new().unwrap();
    let o = itfl(
        tmp.path(),
        &["train", "--seed", "0", "--session", "absent.itfl"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing session file"));
}

#[test]
fn plot_draws_three_labeled_polylines() {
    let tmp = TempDir::new().unwrap();
    ok(itfl(
        tmp.path(),
        &[
            "train",
            "--seed",
            "1",
            "--iterations",
            "5",
            "--aggregator",
            "fedavg",
        ],
    ));
    ok(itfl(
        tmp.path(),
        &["plot", "out/fedavg_seed1.csv", "--out", "fig.svg"],
    ));
    let svg = fs::read_to_string(tmp.path().join("fig.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 3);
    for s in ["accuracy", "loss", "slack"] {
        assert!(svg.contains(&format!(r#"data-series="{s}""#)), "{s}");
        assert!(svg.contains(&format!(">{s}</text>")), "{s}");
    }
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("small.toml"),
        "task = \"synthetic_logreg\"\naggregator = \"byitfl\"\n[protocol]\nn = 8\nb = 1\nt = 1\ne = 1\nq = 64\n",
    )
    .unwrap();
    let o = itfl(tmp.path(), &["train", "--config", "small.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("n >= 2b + (tau+2)(m+t-1) + e + 1"),
        "{}",
        stderr(&o)
    );

    fs::write(
        tmp.path().join("broken.toml"),
        "task = \"synthetic_logreg\"\naggregator = \n",
    )
    .unwrap();
    let o = itfl(tmp.path(), &["train", "--config", "broken.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let o = itfl(tmp.path(), &["init", "--aggregator", "fedavg"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn worker_count_must_be_positive() {
    let tmp = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_itfl"))
        .current_dir(tmp.path())
        .env("ITFL_WORKERS", "0")
        .args(["train", "--iterations", "1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_itfl"))
        .current_dir(tmp.path())
        .env("ITFL_WORKERS", "2")
        .args(["train", "--iterations", "1", "--aggregator", "fedavg"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn verify_on_the_bundled_config_passes_every_criterion() {
    let tmp = TempDir::new().unwrap();
    let o = ok(itfl(tmp.path(), &["verify"]));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(
        text.lines().filter(|l| l.starts_with("PASS")).count(),
        11,
        "{text}"
    );
    assert!(text.contains("11 of 11 criteria passed"));
}
