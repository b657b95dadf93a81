//! End-to-end CLI tests: round-trips, exit codes, determinism.

use std::path::Path;
use std::process::Command;

use stein_spc::cli::run;
use stein_spc::formats::DesignRecord;

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

const STABLE: &str = "tests/data/counts_stable.csv";
const SHIFTED: &str = "tests/data/counts_shifted.csv";
const BAD: &str = "tests/data/counts_bad.csv";

#[test]
fn calibrate_then_monitor_round_trip() {
    let dir = tmp();
    let design = dir.path().join("design.json");
    let code = run([
        "stein-spc",
        "calibrate",
        "--chart",
        "ewma",
        "--mu0",
        "2",
        "--reps",
        "800",
        "--seed",
        "7",
        "--bracket-lo",
        "0.5",
        "--bracket-hi",
        "1.3",
        "--rel-tol",
        "0.02",
        "--out",
        design.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);

    // the record parses and round-trips into a runnable spec
    let record = DesignRecord::read_path(&design).unwrap();
    assert_eq!(record.kind, "ewma");
    let l = record.limit.unwrap();
    assert!((0.7..=1.1).contains(&l), "calibrated L = {l}");
    assert!(record.achieved_arl.unwrap() > 300.0);
    record.to_spec().unwrap();

    // monitor accepts the file unchanged
    let traj = dir.path().join("traj.csv");
    let svg = dir.path().join("chart.svg");
    let code = run([
        "stein-spc",
        "monitor",
        SHIFTED,
        "--design",
        design.to_str().unwrap(),
        "--out",
        traj.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let traj = std::fs::read_to_string(traj).unwrap();
    assert!(traj.starts_with("t,x,stat,lcl,ucl,alarm\n"));
    assert_eq!(traj.lines().count(), 121); // header + 120 points
    let svg = std::fs::read_to_string(svg).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn monitor_inline_c_chart_alarm_position() {
    let dir = tmp();
    let traj = dir.path().join("traj.csv");
    let code = run([
        "stein-spc",
        "monitor",
        SHIFTED,
        "--chart",
        "c",
        "--mu0",
        "2",
        "--threshold",
        "6",
        "--out",
        traj.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    // first count >= 6 sits at t = 62 in the fixture
    let traj = std::fs::read_to_string(traj).unwrap();
    let first_alarm = traj
        .lines()
        .skip(1)
        .position(|l| l.ends_with(",1"))
        .map(|i| i + 1);
    assert_eq!(first_alarm, Some(62));
}

#[test]
fn monitor_stable_series_has_no_alarm_and_exits_zero() {
    let code = run([
        "stein-spc",
        "monitor",
        STABLE,
        "--chart",
        "c",
        "--mu0",
        "2",
        "--threshold",
        "7",
    ]);
    assert_eq!(code, 0);
}

#[test]
fn exit_codes() {
    // usage: conflicting design sources
    assert_eq!(
        run([
            "stein-spc",
            "monitor",
            SHIFTED,
            "--design",
            "x.json",
            "--chart",
            "c",
            "--mu0",
            "2",
            "--threshold",
            "6",
        ]),
        1
    );
    // usage: ab chart without weight
    assert_eq!(
        run(["stein-spc", "calibrate", "--chart", "abc", "--mu0", "2"]),
        1
    );
    // usage: unknown tuned grid
    assert_eq!(run(["stein-spc", "table", "--table", "1", "--mu0", "3"]), 1);
    // input: malformed counts (line number surfaces in the message)
    assert_eq!(run(["stein-spc", "phase1", BAD]), 2);
    // input: missing file
    assert_eq!(
        run([
            "stein-spc",
            "monitor",
            "missing.csv",
            "--chart",
            "c",
            "--mu0",
            "2",
            "--threshold",
            "6"
        ]),
        2
    );
    // numerical: bracket that cannot enclose the target
    assert_eq!(
        run([
            "stein-spc",
            "calibrate",
            "--chart",
            "ewma",
            "--mu0",
            "2",
            "--reps",
            "200",
            "--bracket-lo",
            "2.5",
            "--bracket-hi",
            "3.0",
        ]),
        3
    );
}

#[test]
fn table_with_one_replication_still_runs() {
    let dir = tmp();
    let csv = dir.path().join("one.csv");
    let code = run([
        "stein-spc",
        "table",
        "--table",
        "1",
        "--mu0",
        "2",
        "--reps",
        "1",
        "--max-t",
        "5000",
        "--out-csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 64);
}

#[test]
fn phase1_report_on_overdispersed_fixture() {
    let dir = tmp();
    let out = dir.path().join("report.json");
    let code = run([
        "stein-spc",
        "phase1",
        SHIFTED,
        "--max-lag",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(doc["schema"], "stein-spc/v1");
    assert_eq!(doc["t0"], 120);
    assert_eq!(doc["acf"].as_array().unwrap().len(), 10);
    assert!(doc["disp_hat"].as_f64().unwrap() > 1.0);
    assert!(doc["zip_fit"]["lambda"].as_f64().unwrap() > 0.0);
}

#[test]
fn table_runs_small_grid_deterministically() {
    let dir = tmp();
    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    let json = dir.path().join("t.json");
    for (csv, threads) in [(&csv_a, "1"), (&csv_b, "4")] {
        let code = run([
            "stein-spc",
            "table",
            "--table",
            "1",
            "--mu0",
            "2",
            "--reps",
            "60",
            "--seed",
            "11",
            "--max-t",
            "2000",
            "--threads",
            threads,
            "--out-csv",
            csv.to_str().unwrap(),
            "--out-json",
            json.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    let a = std::fs::read_to_string(&csv_a).unwrap();
    let b = std::fs::read_to_string(&csv_b).unwrap();
    assert_eq!(a, b, "tables differ across worker counts");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(doc["cells"].as_array().unwrap().len(), 63);
    assert_eq!(doc["table"], "zero_state");
}

/// True subprocess run: stdout text, env-var seed fallback.
#[test]
fn binary_end_to_end() {
    let bin = env!("CARGO_BIN_EXE_stein-spc");
    let out = Command::new(bin)
        .args([
            "monitor",
            SHIFTED,
            "--chart",
            "c",
            "--mu0",
            "2",
            "--threshold",
            "6",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("first alarm at t = 62"), "stdout: {stdout}");

    // STEIN_SPC_SEED is the --seed fallback
    let dir = tmp();
    let a = dir.path().join("env.csv");
    let b = dir.path().join("flag.csv");
    let st = Command::new(bin)
        .env("STEIN_SPC_SEED", "123")
        .args([
            "table", "--table", "1", "--mu0", "2", "--reps", "40", "--max-t", "1000",
        ])
        .args(["--out-csv", a.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(st.success());
    let st = Command::new(bin)
        .args([
            "table", "--table", "1", "--mu0", "2", "--reps", "40", "--max-t", "1000",
        ])
        .args(["--seed", "123", "--out-csv", b.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(st.success());
    assert_eq!(
        std::fs::read_to_string(a).unwrap(),
        std::fs::read_to_string(b).unwrap()
    );
    assert!(Path::new(bin).exists());
}
