//! End-to-end tests of the command-line surface: exit-code contract,
//! deterministic outputs, and the file formats.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_freedim")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("freedim-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_spectrum01(dir: &Path) -> PathBuf {
    let p = dir.join("spec01.json");
    std::fs::write(&p, r#"{"kind": "spectrum", "points": [0.0, 1.0]}"#).unwrap();
    p
}

#[test]
fn battery_lists_words() {
    let dir = temp_dir("battery");
    let out = run_in(&dir, &["battery", "--n", "2", "--degree", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.trim().lines().collect();
    assert_eq!(lines.len(), 7); // 1 + 2 + 4
    assert_eq!(lines[0], "1");
    assert!(lines.contains(&"X1*X2"));
}

#[test]
fn sample_is_deterministic_and_reports() {
    let dir_a = temp_dir("det-a");
    let dir_b = temp_dir("det-b");
    for dir in [&dir_a, &dir_b] {
        write_spectrum01(dir);
        let out = run_in(
            dir,
            &[
                "sample",
                "--presentation",
                "spec01.json",
                "--k",
                "6",
                "--eps",
                "0.05",
                "--count",
                "2",
                "--seed",
                "9",
                "--out",
                "out",
            ],
        );
        assert_eq!(out.status.code(), Some(0), "{out:?}");
    }
    for name in ["out/sample_0.htup", "out/sample_1.htup", "out/report.json"] {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir_a.join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["meta"]["config"]["seed"], 9);
}

#[test]
fn sample_soft_fails_on_divisibility_obstruction() {
    let dir = temp_dir("softfail");
    std::fs::write(
        dir.join("amp.json"),
        r#"{"kind": "amplification", "base": {"kind": "spectrum", "points": [1.0]}, "n": 2}"#,
    )
    .unwrap();
    let out = run_in(
        &dir,
        &[
            "sample",
            "--presentation",
            "amp.json",
            "--k",
            "5",
            "--eps",
            "0.05",
            "--seed",
            "3",
            "--iters",
            "400",
            "--degree",
            "2",
            "--out",
            "out",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "expected soft fail: {out:?}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["pass"], false);
    let defect = report["samples"][0]["defect"].as_f64().unwrap();
    assert!(defect >= 0.1, "defect table shows the obstruction: {defect}");
}

#[test]
fn dim_delta_top_table() {
    let dir = temp_dir("dim");
    write_spectrum01(&dir);
    let out = run_in(
        &dir,
        &[
            "dim",
            "--mode",
            "delta_top",
            "--presentation",
            "spec01.json",
            "--k-list",
            "8,12",
            "--seed",
            "1",
        ],
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("estimate: 0.5"), "{text}");
}

#[test]
fn orbit_dist_matches_oracle_and_rejects_mismatch() {
    let dir = temp_dir("orbit");
    std::fs::write(
        dir.join("a.htup"),
        "HTUP1 2 1\n0.0 0.0 0.0 0.0\n0.0 0.0 2.0 0.0\n",
    )
    .unwrap();
    std::fs::write(
        dir.join("b.htup"),
        "HTUP1 2 1\n1.0 0.0 0.0 0.0\n0.0 0.0 3.0 0.0\n",
    )
    .unwrap();
    std::fs::write(
        dir.join("c.htup"),
        "HTUP1 3 1\n1.0 0.0 0.0 0.0 0.0 0.0\n0.0 0.0 1.0 0.0 0.0 0.0\n0.0 0.0 0.0 0.0 1.0 0.0\n",
    )
    .unwrap();
    let out = run_in(&dir, &["orbit-dist", "a.htup", "b.htup", "--seed", "5", "--oracle"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("orbit_distance"));
    let gap_line = text.lines().find(|l| l.starts_with("gap")).unwrap();
    let gap: f64 = gap_line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(gap <= 1e-9, "{gap_line}");
    // Identical files give zero.
    let out = run_in(&dir, &["orbit-dist", "a.htup", "a.htup", "--seed", "5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let d: f64 = text
        .lines()
        .next()
        .unwrap()
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(d <= 1e-8);
    // Shape mismatch is a usage error.
    let out = run_in(&dir, &["orbit-dist", "a.htup", "c.htup", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cover_emits_csv() {
    let dir = temp_dir("cover");
    write_spectrum01(&dir);
    let out = run_in(
        &dir,
        &[
            "cover",
            "--presentation",
            "spec01.json",
            "--k",
            "1",
            "--omega-grid",
            "0.1",
            "--metric",
            "op_norm",
            "--eps",
            "0.01",
            "--seed",
            "3",
            "--brute-force",
            "--grid-step",
            "0.005",
        ],
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.trim().lines();
    assert_eq!(
        lines.next().unwrap(),
        "metric,k,omega,epsilon,log_lower,log_upper,num_points,seed"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("op_norm,1,0.1,0.01,"), "{row}");
}

#[test]
fn mf_check_exit_codes() {
    let dir = temp_dir("mf");
    write_spectrum01(&dir);
    let ok = run_in(
        &dir,
        &[
            "mf-check",
            "--presentation",
            "spec01.json",
            "--mode",
            "approx",
            "--k-list",
            "4,6,8",
            "--eps",
            "0.05",
            "--seed",
            "2",
        ],
    );
    assert_eq!(ok.status.code(), Some(0), "{ok:?}");
    // Wrong-spectrum model: converge mode against explicit bad models.
    std::fs::write(
        dir.join("bad.htup"),
        "HTUP1 2 1\n0.0 0.0 0.0 0.0\n0.0 0.0 2.0 0.0\n",
    )
    .unwrap();
    let fail = run_in(
        &dir,
        &[
            "mf-check",
            "--presentation",
            "spec01.json",
            "--mode",
            "converge",
            "--k-list",
            "2",
            "--eps",
            "0.05",
            "--seed",
            "2",
            "--models",
            "bad.htup",
        ],
    );
    assert_eq!(fail.status.code(), Some(2), "{fail:?}");
}

#[test]
fn free_product_report_against_oracle() {
    let dir = temp_dir("fp");
    std::fs::write(
        dir.join("fp.json"),
        r#"{"kind": "free_product",
            "left": {"kind": "spectrum", "points": [0.0, 1.0]},
            "right": {"kind": "spectrum", "points": [0.0, 1.0]}}"#,
    )
    .unwrap();
    let out = run_in(
        &dir,
        &[
            "free-product",
            "--presentation",
            "fp.json",
            "--sizes",
            "16,32",
            "--seed",
            "4",
            "--degree",
            "3",
            "--out",
            "fp_report.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("fp_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["oracle"], true);
    assert_eq!(report["one_sided_ok"], true);
    assert!(report["rows"].as_array().unwrap().len() >= 6);
}

#[test]
fn run_config_dispatch() {
    let dir = temp_dir("runcfg");
    write_spectrum01(&dir);
    std::fs::write(
        dir.join("cfg.json"),
        r#"{"cmd": "dim", "mode": "delta_top", "presentation": "spec01.json",
            "k_list": [8], "seed": 1}"#,
    )
    .unwrap();
    let out = run_in(&dir, &["run", "--config", "cfg.json"]);
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("estimate: 0.5"), "{text}");
}

#[test]
fn io_errors_exit_one() {
    let dir = temp_dir("ioerr");
    let out = run_in(
        &dir,
        &[
            "dim",
            "--mode",
            "delta_top",
            "--presentation",
            "missing.json",
            "--k-list",
            "8",
            "--seed",
            "1",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8(out.stderr).unwrap().is_empty());
}
