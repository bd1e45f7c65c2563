use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use memkin_core::trace::{read_trace, TRACE_HEADER};

const SMALL: &[&str] = &[
    "grid.n_super=200",
    "grid.n_nodes=61",
    "device.initial_mean_position_m=3e-7",
    "sweep.waveform.cycle_duration_s=0.2",
];

fn memkin(args: &[&str], overrides: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_memkin"));
    cmd.args(args);
    for o in overrides {
        cmd.arg("--override").arg(o);
    }
    cmd.output().expect("binary runs")
}

fn run_ok(args: &[&str], overrides: &[&str]) {
    let out = memkin(args, overrides);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn trace_rows(path: &Path) -> usize {
    let text = fs::read_to_string(path).unwrap();
    assert!(text.starts_with(TRACE_HEADER));
    assert!(!text.contains('\r'));
    read_trace(text.as_bytes()).unwrap().len()
}

#[test]
fn sweep_writes_one_row_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    run_ok(&["sweep", "--seed", "3", "--out", out.to_str().unwrap()], SMALL);
    // 0.2 s at 1 ms
    assert_eq!(trace_rows(&out.join("trace.csv")), 200);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 3);
    assert_eq!(summary["experiment"], "sweep");
    assert_eq!(summary["config"]["grid"]["n_super"], 200);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run_ok(&["c2c", "--seed", "11", "--out", out.to_str().unwrap()], SMALL);
    }
    for rel in ["trace.csv", "cycle_00/trace.csv", "cycle_03/trace.csv"] {
        assert_eq!(fs::read(a.join(rel)).unwrap(), fs::read(b.join(rel)).unwrap(), "{rel}");
    }
    // summaries differ only in the echoed output directory
    let summary = |dir: &Path| {
        let mut v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
        v["config"].as_object_mut().unwrap().remove("output_dir");
        v
    };
    assert_eq!(summary(&a), summary(&b));
}

#[test]
fn different_seeds_differ() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(&["sweep", "--seed", "1", "--out", a.to_str().unwrap()], SMALL);
    run_ok(&["sweep", "--seed", "2", "--out", b.to_str().unwrap()], SMALL);
    assert_ne!(
        fs::read(a.join("trace.csv")).unwrap(),
        fs::read(b.join("trace.csv")).unwrap()
    );
}

#[test]
fn d2d_table_writes_four_devices() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d2d");
    run_ok(&["d2d", "--seed", "5", "--out", out.to_str().unwrap()], &SMALL[..2]);
    for k in 0..4 {
        assert!(trace_rows(&out.join(format!("device_{k:02}/trace.csv"))) > 0);
    }
    assert!(!out.join("device_04").exists());
}

#[test]
fn row_cap_downsamples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("capped");
    let mut o = SMALL.to_vec();
    o.push("output.max_trace_rows=50");
    run_ok(&["sweep", "--seed", "1", "--out", out.to_str().unwrap()], &o);
    assert!(trace_rows(&out.join("trace.csv")) <= 50);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["downsampled"][0], "trace.csv");
}

#[test]
fn bad_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[device]\nn0_top = 0.5\n").unwrap();
    let out = memkin(
        &[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error[config]"), "{err}");
    assert!(err.contains("n0_top"), "{err}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn unknown_key_is_rejected() {
    let out = memkin(&["sweep", "--seed", "1"], &["device.no_such_field=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let out = memkin(&["sweep", "--config", "/nonexistent/memkin.toml"], &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[io]"));
}

#[test]
fn printed_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = memkin(&["config", "--seed", "9"], &["sweep.read_v=1.5"]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let cfg = dir.path().join("effective.toml");
    fs::write(&cfg, &first.stdout).unwrap();
    let second = memkin(&["config", "--config", cfg.to_str().unwrap()], &[]);
    assert!(second.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert!(String::from_utf8_lossy(&first.stdout).contains("read_v = 1.5"));
}
