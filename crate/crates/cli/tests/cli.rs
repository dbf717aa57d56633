use std::path::Path;
use std::process::Command;

use fwm_cascade::fock::InputSpec;
use fwm_cascade_cli::commands::{CoeffsResult, DetectResult, FilterResult, OracleResult, TuneResult};
use fwm_cascade_cli::config::Experiment;
use fwm_cascade_cli::output::Report;
use fwm_cascade_cli::CliError;
use serde::de::DeserializeOwned;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["fwm-cascade"];
    argv.extend_from_slice(args);
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = fwm_cascade_cli::run(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json_report<R: DeserializeOwned>(args: &[&str]) -> Report<R> {
    let mut argv = args.to_vec();
    argv.extend(["--format", "json"]);
    let (code, out, err) = run(&argv);
    assert_eq!(code, 0, "{err}");
    let report: Report<R> = serde_json::from_str(&out).expect("JSON output re-parses");
    report.config.validate().expect("echoed config validates");
    report
}

#[test]
fn json_round_trips_for_every_subcommand() {
    let r: Report<CoeffsResult> = json_report(&["coeffs", "--max-n", "3"]);
    assert_eq!(r.config.experiment, Experiment::Coeffs);
    assert_eq!(r.result.rows.len(), 2 + 3 + 4);

    let r: Report<FilterResult> = json_report(&["filter", "--input", "coherent:2.25", "--stages", "8"]);
    assert!(matches!(r.config.input, InputSpec::Coherent { mean_n, .. } if mean_n == 2.25));
    assert!(r.result.rows.windows(2).all(|w| w[1].p_ge2 < w[0].p_ge2));

    let r: Report<DetectResult> = json_report(&["detect", "--trials", "2000", "--seed", "5"]);
    assert_eq!(r.config.trials, Some(2000));
    assert!((r.result.p_only_final - 8.4685e-4).abs() < 1e-7);

    let r: Report<TuneResult> = json_report(&["tune", "--sector", "2"]);
    assert!(r.result.lengths[0].exact);

    let r: Report<OracleResult> = json_report(&["oracle-check", "--truncation", "2"]);
    assert!(r.result.passed);
}

#[test]
fn csv_layout() {
    let (code, out, _) = run(&["filter", "--input", "fock:1", "--stages", "3"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "stage,p0,p1,p_ge2");
    assert_eq!(lines.len(), 1 + 4);
    for line in &lines[1..] {
        assert!(line.contains(",1.00000000000e0,"), "{line}");
    }
}

#[test]
fn detect_reports_signatures() {
    let (_, out, _) = run(&["detect", "--input", "fock:0"]);
    assert!(out.contains("summary,silent,1.00000000000e0,"), "{out}");
    let (_, out, _) = run(&["detect", "--input", "fock:1"]);
    assert!(out.contains("summary,only_final,1.00000000000e0,"), "{out}");
}

#[test]
fn validation_errors_exit_1() {
    for args in [
        &["filter", "--stages", "3", "--theta", "pi", "--theta", "2pi"][..],
        &["detect", "--efficiency", "1.5"],
        &["filter", "--input", "thermal:1"],
        &["filter", "--input", "coherent:4", "--truncation", "5"],
        &["oracle-check", "--truncation", "12"],
        &["tune", "--sector", "0"],
        &["coeffs", "--bogus"],
    ] {
        let (code, _, err) = run(args);
        assert_eq!(code, 1, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
}

#[test]
fn io_errors_exit_3() {
    let (code, _, err) = run(&["coeffs", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(code, 3);
    assert!(err.contains("/nonexistent-dir/x.csv"));
    let (code, _, _) = run(&["coeffs", "--config", "/nonexistent-dir/run.cfg"]);
    assert_eq!(code, 3);
}

#[test]
fn tolerance_failures_map_to_exit_2() {
    let e: CliError = fwm_cascade::error::Error::IntegrationTolerance {
        estimate: 1e-3,
        tolerance: 1e-8,
        steps: 3,
    }
    .into();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["--version"]).0, 0);
    assert_eq!(run(&["detect", "--help"]).0, 0);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# two-photon discrimination\ninput = fock:2\nstages = 2\ntheta = pi\nformat = json\n").unwrap();
    let path = cfg.to_str().unwrap();

    let (code, out, _) = run(&["detect", "--config", path]);
    assert_eq!(code, 0);
    let r: Report<DetectResult> = serde_json::from_str(&out).unwrap();
    assert_eq!(r.config.stages, 2);

    let (code, out, _) = run(&["detect", "--config", path, "--stages", "4", "--format", "csv"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("kind,label,probability,sampled_frequency"));
    assert!(out.contains("stage_fired_4"));
}

fn binary() -> &'static Path {
    Path::new(env!("CARGO_BIN_EXE_fwm-cascade"))
}

#[test]
fn binary_exit_codes_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("detect.json");
    let args = ["detect", "--trials", "5000", "--seed", "9", "--format", "json", "--out"];
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let status = Command::new(binary()).args(args).arg(&out).status().unwrap();
        assert_eq!(status.code(), Some(0));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);

    let status = Command::new(binary()).args(["filter", "--efficiency", "0"]).output().unwrap();
    assert_eq!(status.status.code(), Some(1));
    let status = Command::new(binary()).args(["coeffs", "--out", "/nonexistent-dir/c.csv"]).output().unwrap();
    assert_eq!(status.status.code(), Some(3));
}

#[test]
fn sampling_depends_on_seed_only() {
    let a = run(&["detect", "--trials", "3000", "--seed", "1"]).1;
    let b = run(&["detect", "--trials", "3000", "--seed", "1"]).1;
    let c = run(&["detect", "--trials", "3000", "--seed", "2"]).1;
    assert_eq!(a, b);
    assert_ne!(a, c);
}
