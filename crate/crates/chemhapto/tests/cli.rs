//! Command-level behavior: config handling, output files, determinism, and
//! the sweep driver. Fast configurations throughout; the full default
//! scenario lives in the acceptance suite.

use std::path::Path;
use std::process::Command;

use chemhapto::commands::{cmd_run, cmd_sweep, run_simulation};
use chemhapto::config::RunConfig;
use chemhapto::grid::read_snapshot;

fn write_cfg(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL_RUN: &str = "\
grid.nx = 32
grid.ny = 32
policy.t_end = 1.0
policy.record_every = 0.25
policy.dt_max = 0.02
";

#[test]
fn zero_horizon_run_writes_single_ledger_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "zero.cfg",
        "grid.nx = 32\ngrid.ny = 32\npolicy.t_end = 0\noutput.dir = out\n",
    );
    let summary = cmd_run(&cfg, Some(dir.path())).unwrap();
    assert_eq!(summary.records.len(), 1);
    let ledger = std::fs::read_to_string(summary.out_dir.join("ledger.csv")).unwrap();
    let rows: Vec<&str> = ledger.lines().collect();
    assert_eq!(rows.len(), 2, "header plus one row");
    assert!(rows[1].starts_with("0,"));
    assert!(summary.out_dir.join("constants.txt").exists());
    assert!(summary.out_dir.join("verdicts.txt").exists());
}

#[test]
fn malformed_key_fails_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "bad.cfg", "chii = 1\n");
    let err = cmd_run(&cfg, Some(dir.path())).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("chii"), "message should name the key: {msg}");
    assert!(msg.contains(":1:"), "message should carry the line: {msg}");
}

#[test]
fn ledger_rows_increase_and_reach_the_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "small.cfg", SMALL_RUN);
    let summary = cmd_run(&cfg, Some(dir.path())).unwrap();
    let ts: Vec<f64> = summary.records.iter().map(|r| r.t).collect();
    for w in ts.windows(2) {
        assert!(w[1] > w[0], "record times must increase: {ts:?}");
    }
    assert!(*ts.last().unwrap() >= 1.0 - 0.25);
    assert_eq!(*ts.last().unwrap(), 1.0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "small.cfg", SMALL_RUN);
    let mut parsed = RunConfig::from_path(&cfg).unwrap();
    parsed.output_dir = dir.path().join("r1");
    run_simulation(&parsed, &dir.path().join("r1")).unwrap();
    run_simulation(&parsed, &dir.path().join("r2")).unwrap();
    let a = std::fs::read(dir.path().join("r1/ledger.csv")).unwrap();
    let b = std::fs::read(dir.path().join("r2/ledger.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn snapshots_round_trip_through_the_reader() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "small.cfg", SMALL_RUN);
    let summary = cmd_run(&cfg, Some(dir.path())).unwrap();
    for name in ["u", "v", "w"] {
        let initial = summary.out_dir.join(format!("{name}_0.000000.dat"));
        let (field, t) = read_snapshot(&initial).unwrap();
        assert_eq!(t, 0.0);
        assert_eq!(field.grid().nx(), 32);
        let final_ = summary.out_dir.join(format!("{name}_1.000000.dat"));
        let (field, t) = read_snapshot(&final_).unwrap();
        assert_eq!(t, 1.0);
        assert!(field.values().iter().all(|v| v.is_finite()));
    }
}

#[test]
fn output_directory_collision_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "small.cfg", SMALL_RUN);
    cmd_run(&cfg, Some(dir.path())).unwrap();
    let err = cmd_run(&cfg, Some(dir.path())).unwrap_err();
    assert!(
        matches!(err, chemhapto::Error::OutputCollision(_)),
        "expected collision, got {err:?}"
    );
}

#[test]
fn single_value_sweep_matches_a_direct_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_cfg(dir.path(), "sweep.cfg", SMALL_RUN);
    let ok = cmd_sweep(&cfg_path, "mu", &[1.0], Some(dir.path())).unwrap();
    assert!(ok);
    let sweep_ledger = std::fs::read(dir.path().join("out/mu_1/ledger.csv")).unwrap();

    let mut direct = RunConfig::from_path(&cfg_path).unwrap();
    direct.output_dir = dir.path().join("direct");
    run_simulation(&direct, &dir.path().join("direct")).unwrap();
    let direct_ledger = std::fs::read(dir.path().join("direct/ledger.csv")).unwrap();
    assert_eq!(sweep_ledger, direct_ledger);

    let summary = std::fs::read_to_string(dir.path().join("out/sweep_summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows[0], "value,final_u_sup,max_u_sup,all_bounded,status");
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("1,"));
    assert!(rows[1].ends_with("ok"));
}

#[test]
fn mu_sweep_produces_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_cfg(dir.path(), "sweep.cfg", SMALL_RUN);
    let ok = cmd_sweep(&cfg_path, "mu", &[0.5, 1.0, 2.0], Some(dir.path())).unwrap();
    assert!(ok);
    let summary = std::fs::read_to_string(dir.path().join("out/sweep_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    for v in ["0.5", "1", "2"] {
        assert!(dir.path().join(format!("out/mu_{v}/ledger.csv")).exists());
        assert!(summary.lines().any(|l| l.starts_with(&format!("{v},"))));
    }
}

#[test]
fn sweep_records_failures_without_aborting_siblings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_cfg(dir.path(), "sweep.cfg", SMALL_RUN);
    // mu must be positive: -1 fails while its siblings complete.
    let ok = cmd_sweep(&cfg_path, "mu", &[-1.0, 1.0], Some(dir.path())).unwrap();
    assert!(!ok);
    let summary = std::fs::read_to_string(dir.path().join("out/sweep_summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].contains("failed"));
    assert!(rows[2].ends_with("ok"));
}

#[test]
fn unknown_sweep_parameter_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_cfg(dir.path(), "sweep.cfg", SMALL_RUN);
    let err = cmd_sweep(&cfg_path, "sigma", &[1.0], Some(dir.path())).unwrap_err();
    assert!(matches!(err, chemhapto::Error::UnknownSweepParameter(_)));
}

#[test]
fn bundled_default_config_parses_and_matches_the_default_scenario() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/default.cfg");
    let cfg = RunConfig::from_path(&path).unwrap();
    let defaults = RunConfig::default();
    assert_eq!(cfg.grid, defaults.grid);
    assert_eq!(cfg.params, defaults.params);
    assert_eq!(cfg.preset, defaults.preset);
    assert_eq!(cfg.policy, defaults.policy);
    assert_eq!(cfg.p_list, defaults.p_list);
}

// The binary is exercised directly for exit codes and the environment
// override, in separate processes so the env var cannot leak across tests.

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chemhapto"))
}

#[test]
fn binary_reports_config_errors_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "bad.cfg", "chii = 1\n");
    let out = binary().arg("run").arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("chii"), "stderr: {stderr}");
}

#[test]
fn binary_honors_chemhapto_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "tiny.cfg",
        "grid.nx = 16\ngrid.ny = 16\npolicy.t_end = 0.2\npolicy.record_every = 0.1\noutput.dir = nested/run\n",
    );
    let root = dir.path().join("root");
    let out = binary()
        .arg("run")
        .arg(&cfg)
        .env("CHEMHAPTO_OUT", &root)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(root.join("nested/run/ledger.csv").exists());
}

#[test]
fn verify_suite_passes_and_is_reproducible() {
    let mut first = Vec::new();
    let ok1 = chemhapto::commands::cmd_verify(&mut first).unwrap();
    let mut second = Vec::new();
    let ok2 = chemhapto::commands::cmd_verify(&mut second).unwrap();
    let text = String::from_utf8_lossy(&first);
    assert!(ok1 && ok2, "verify output:\n{text}");
    assert_eq!(first, second, "verify output must be reproducible");
}

#[test]
fn mms_command_passes_and_prints_orders() {
    let mut buf = Vec::new();
    let ok = chemhapto::commands::cmd_mms(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(ok, "mms output:\n{text}");
    for name in ["heat", "v-equation", "advection"] {
        assert!(text.contains(name));
    }
    assert!(text.contains("PASS"));
}
