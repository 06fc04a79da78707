use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flywheel_soc::cli::parse_trace_csv;

const BIN: &str = env!("CARGO_BIN_EXE_flywheel-soc");

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn golden(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(data("golden_config.txt"))
        .arg("--profile")
        .arg(data("golden_profile.csv"))
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn simulate_zero_profile_decays() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("idle.csv");
    let mut text = String::from("slot,power_w\n");
    for k in 1..=20 {
        text.push_str(&format!("{k},0\n"));
    }
    std::fs::write(&profile, text).unwrap();
    let out = Command::new(BIN)
        .args(["simulate", "--engine", "exact", "--config"])
        .arg(data("golden_config.txt"))
        .arg("--profile")
        .arg(&profile)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let rows = parse_trace_csv(&stdout(&out), "stdout").unwrap();
    assert_eq!(rows.len(), 21);
    let expected = 5e7 * (-20.0 * 300.0 / 10_000.0f64).exp();
    assert!((rows[20].1 - expected).abs() <= 1e-12 * expected);
}

#[test]
fn compare_is_deterministic_across_thread_counts() {
    let run = |threads: &str| {
        let out = Command::new(BIN)
            .env("RAYON_NUM_THREADS", threads)
            .args(["compare", "--engine", "approx-truncated", "--config"])
            .arg(data("golden_config.txt"))
            .arg("--profile")
            .arg(data("golden_profile.csv"))
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        out.stdout
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    assert_eq!(one, run("4"));
    let text = String::from_utf8(one).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("k,t_s,e_j,case,flag,e_ref_j,gap_j,bound_j")
    );
    assert_eq!(lines.count(), 101);
}

#[test]
fn json_mirrors_csv() {
    let csv = golden(&["simulate", "--engine", "approx-full"]);
    let json = golden(&["simulate", "--engine", "approx-full", "--format", "json"]);
    let rows = parse_trace_csv(&stdout(&csv), "csv").unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    let json_rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), json_rows.len());
    for ((k, e), row) in rows.iter().zip(json_rows) {
        assert_eq!(row["k"].as_u64().unwrap() as usize, *k);
        assert_eq!(row["e_j"].as_f64().unwrap(), *e);
        for field in ["t_s", "case", "flag"] {
            assert!(row.get(field).is_some());
        }
    }
}

#[test]
fn output_file_and_unwritable_destination() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let out = golden(&["simulate", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 102);

    let bad = dir.path().join("missing/trace.csv");
    let out = golden(&["simulate", "--output", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validation_errors_exit_1() {
    assert_eq!(golden(&["simulate", "--e-c", "1.5"]).status.code(), Some(1));
    assert_eq!(
        golden(&["simulate", "--engine", "warp"]).status.code(),
        Some(1)
    );
    assert_eq!(
        golden(&["simulate", "--engine", "ode-oracle", "--clamp"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        golden(&["simulate", "--p-rated-w", "5e4"]).status.code(),
        Some(1)
    );
    assert_eq!(
        golden(&["bound", "--engine", "exact"]).status.code(),
        Some(1)
    );

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "slot,power_w\n").unwrap();
    let out = Command::new(BIN)
        .arg("simulate")
        .arg("--config")
        .arg(data("golden_config.txt"))
        .arg("--profile")
        .arg(&empty)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_files_exit_2() {
    let out = Command::new(BIN)
        .args([
            "simulate",
            "--profile",
            "/nonexistent/profile.csv",
            "--config",
        ])
        .arg(data("golden_config.txt"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(
        golden(&["bound", "--approx-trace", "/nonexistent/trace.csv"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn flags_override_config() {
    let base = golden(&["simulate"]);
    let shifted = golden(&["simulate", "--e-init-j", "1e7"]);
    let a = parse_trace_csv(&stdout(&base), "a").unwrap();
    let b = parse_trace_csv(&stdout(&shifted), "b").unwrap();
    assert_eq!(a[0].1, 5e7);
    assert_eq!(b[0].1, 1e7);
}

#[test]
fn bound_check_flags_a_corrupted_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = golden(&["simulate", "--engine", "approx-truncated"]);
    let clean = dir.path().join("clean.csv");
    std::fs::write(&clean, &trace.stdout).unwrap();
    let out = golden(&[
        "bound",
        "--check",
        "--approx-trace",
        clean.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let mut lines: Vec<String> = stdout(&trace).lines().map(str::to_owned).collect();
    let mut fields: Vec<String> = lines[40].split(',').map(str::to_owned).collect();
    let e: f64 = fields[2].parse().unwrap();
    fields[2] = format!("{:.16e}", e + 3e7);
    lines[40] = fields.join(",");
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, lines.join("\n")).unwrap();
    let out = golden(&["bound", "--check", "--approx-trace", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let out = golden(&["bound", "--approx-trace", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn classify_tags_the_symmetric_switch() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("p.csv");
    std::fs::write(&profile, "slot,power_w\n1,-50\n2,50\n").unwrap();
    let out = Command::new(BIN)
        .args([
            "classify",
            "--t-loss-s",
            "1e4",
            "--t-cont-s",
            "0.2",
            "--e-c",
            "0.9",
            "--e-d",
            "0.95",
        ])
        .args([
            "--e-init-j",
            "0",
            "--e-cap-j",
            "1e6",
            "--p-rated-w",
            "100",
            "--delta-s",
            "1",
        ])
        .arg("--profile")
        .arg(&profile)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let row = text.lines().nth(2).unwrap();
    assert!(row.contains("OppositeSwitch"), "{row}");
    let t_change: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!((t_change - 0.2 * 2f64.ln()).abs() < 1e-12);
}

#[test]
fn help_exits_0() {
    let out = Command::new(BIN).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = Command::new(BIN).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
