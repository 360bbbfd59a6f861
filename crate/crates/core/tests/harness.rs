//! Sweep files, configuration errors and the command-line interface.

use std::fs;
use std::process::Command;

use backcom_mec::harness::{emit_results, parse_config, read_records, read_summary, run_sweep};
use backcom_mec::optimizer::SolverConfig;
use backcom_mec::Error;

const BIN: &str = env!("CARGO_BIN_EXE_backcom-mec");

fn small_config() -> backcom_mec::harness::ExperimentConfig {
    parse_config(
        r#"{"sweep": {"axis": "bits", "values": [0.2, 0.5], "trials": 1, "master_seed": 11}}"#,
    )
    .unwrap()
}

#[test]
fn one_trial_sweep_is_byte_identical_across_runs() {
    let cfg = small_config();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    emit_results(&run_sweep(&cfg, &SolverConfig::default()), a.path()).unwrap();
    emit_results(&run_sweep(&cfg, &SolverConfig::default()), b.path()).unwrap();
    for name in ["records.csv", "summary.csv"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn worker_count_does_not_change_records() {
    let cfg = small_config();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_sweep(&cfg, &SolverConfig::default()))
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn written_files_parse_back_to_the_sweep() {
    let cfg = small_config();
    let res = run_sweep(&cfg, &SolverConfig::default());
    let dir = tempfile::tempdir().unwrap();
    let paths = emit_results(&res, dir.path()).unwrap();
    assert_eq!(paths.len(), 3);
    assert_eq!(read_records(&paths[0]).unwrap(), res.records);
    assert_eq!(read_summary(&paths[1]).unwrap(), res.summary);
    // full local computing cannot reach 0.5 Mbit, and its mean ignores that cell
    let row = res.row(backcom_mec::optimizer::Scheme::FullLocal, 5e5).unwrap();
    assert_eq!((row.feasible, row.infeasible, row.mean_eta_bits_per_joule), (0, 1, None));
}

#[test]
fn config_errors_name_the_field() {
    for (text, path) in [
        (r#"{"system": {"bandwidth_hz": -1e5}}"#, "system.bandwidth_hz"),
        (r#"{"sweep": {"trials": 0}}"#, "sweep.trials"),
        (r#"{"sweep": {"values": [0.5, 0.2]}}"#, "sweep.values"),
        (r#"{"sweep": {"axis": "power"}}"#, "sweep.axis"),
        (r#"{"channel": {"rician": 3}}"#, "channel.rician"),
    ] {
        match parse_config(text) {
            Err(Error::Config { path: p, .. }) => assert_eq!(p, path, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
    assert!(matches!(parse_config("{"), Err(Error::Config { .. })));
}

#[test]
fn config_overrides_convert_to_si() {
    let cfg = parse_config(r#"{"system": {"min_bits_mbit": 0.4}, "sweep": {"axis": "bits", "values": [0.3]}}"#)
        .unwrap();
    assert_eq!(cfg.sys.users[0].min_bits, 4e5);
    assert_eq!(cfg.values, vec![3e5]);
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn cli_solve_prints_reports() {
    let (code, stdout) = cli(&["solve", "--seed", "3", "--scheme", "full-local"]);
    assert_eq!(code, 0);
    let reports: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(reports[0]["scheme"], "full-local");
    assert_eq!(reports[0]["feasible"], true);
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"system": {"noise_power_w": 0}}"#).unwrap();
    assert_eq!(cli(&["solve", "--config", bad.to_str().unwrap()]).0, 2);
    assert_eq!(cli(&["solve", "--config", "/nonexistent/config.json"]).0, 2);
    assert_eq!(cli(&["sweep", "--axis", "power"]).0, 2);

    let hard = dir.path().join("hard.json");
    fs::write(&hard, r#"{"system": {"min_bits_mbit": 50}}"#).unwrap();
    assert_eq!(cli(&["solve", "--config", hard.to_str().unwrap()]).0, 3);
    let out = dir.path().join("out");
    let args = ["sweep", "--config", hard.to_str().unwrap(), "--trials", "1", "--out", out.to_str().unwrap()];
    assert_eq!(cli(&args).0, 3);
}

#[test]
fn cli_sweep_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let (code, _) = cli(&[
        "sweep", "--axis", "bits", "--trials", "1", "--scheme", "full-local", "--scheme", "non-reciprocal",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let recs = read_records(&out.join("records.csv")).unwrap();
    assert_eq!(recs.len(), 2 * 6);
    assert!(out.join("plot_summary.py").exists());
}

#[test]
fn cli_gap_and_verify_pass() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = cli(&["gap", "--trials", "500", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    let text = fs::read_to_string(dir.path().join("gap.csv")).unwrap();
    assert_eq!(text.lines().count(), 501);
    let (code, stdout) = cli(&["verify", "--trials", "2", "--scheme", "full-local"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("2 of 2 instances passed"));
}
