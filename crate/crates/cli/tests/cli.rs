use std::path::Path;
use std::process::{Command, Output};

fn spdelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spdelab")).args(args).output().unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_string_lossy().into_owned()
}

#[test]
fn lemma_check_reports_zero_violations() {
    let dir = tempfile::tempdir().unwrap();
    let o = spdelab(&["lemma-check", "--seed", "3", "--replicates", "30", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l == "violations,0"), "{summary}");
    assert!(summary.lines().any(|l| l == "gate_inequality,pass"));
    let checks = std::fs::read_to_string(dir.path().join("checks.csv")).unwrap();
    assert_eq!(checks.lines().count(), 1 + 30 * 9);
    let manifest = std::fs::read_to_string(dir.path().join("manifest.csv")).unwrap();
    assert!(manifest.contains("config.seed,3"));
    assert!(manifest.lines().any(|l| l.starts_with("build_id,v")));
}

#[test]
fn couple_rejects_small_x0() {
    let dir = tempfile::tempdir().unwrap();
    let o = spdelab(&[
        "couple",
        "--set",
        "eps=0.25",
        "--set",
        "x0=0.5",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("2·b·eps < x0"), "{err}");
    assert!(!dir.path().join("summary.csv").exists());
}

#[test]
fn config_errors_exit_with_two() {
    assert_eq!(spdelab(&["lemma-check", "--set", "nonsense=1"]).status.code(), Some(2));
    assert_eq!(spdelab(&["lemma-check", "--replicates", "0"]).status.code(), Some(2));
    assert_eq!(spdelab(&["no-such-command"]).status.code(), Some(2));
    let o = spdelab(&["sde-sticky", "--set", "scheme=milstein"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# hitting from 0.2\nx_start = 0.2\nreplicates = 7\nseed = 5\n").unwrap();
    let out = dir.path().join("out");
    let o = spdelab(&[
        "sde-sticky",
        "--config",
        &cfg.to_string_lossy(),
        "--seeds",
        "9",
        "--out",
        &out_arg(&out),
    ]);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(3));
    let manifest = std::fs::read_to_string(out.join("manifest.csv")).unwrap();
    assert!(manifest.contains("config.x_start,0.2"));
    assert!(manifest.contains("config.replicates,9"));
    assert!(manifest.contains("config.seed,5"));
    let paths = std::fs::read_to_string(out.join("paths.csv")).unwrap();
    assert_eq!(paths.lines().count(), 10);
}

#[test]
fn worker_count_does_not_change_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, w) in [(&a, "1"), (&b, "2")] {
        let o = spdelab(&[
            "girsanov-survival",
            "--replicates",
            "300",
            "--set",
            "ks_replicates=100",
            "--workers",
            w,
            "--out",
            &out_arg(dir.path()),
        ]);
        assert!(o.status.code() == Some(0) || o.status.code() == Some(3));
    }
    for f in ["times.csv", "survival.csv", "summary.csv", "manifest.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn failed_gate_exits_with_three() {
    // Started far from 0, almost every path survives to T = 2, so the fitted
    // exponent is near 0 instead of -2/3.
    let dir = tempfile::tempdir().unwrap();
    let o = spdelab(&[
        "girsanov-survival",
        "--replicates",
        "100",
        "--set",
        "y0=10",
        "--set",
        "t_list=1,2",
        "--set",
        "ks_replicates=50",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL slope"), "{stdout}");
    assert!(dir.path().join("summary.csv").exists());
}
