//! End-to-end checks of the `qei` binary: flag parsing, config-file
//! handling, output formats, reproducibility, and the exit-code contract
//! (0 ok, 1 config, 2 divergence, 3 non-convergence).

use std::process::{Command, Output};

fn qei(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qei"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}); stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A cos^2 profile handed over as raw samples, with a declared cubic
/// Fourier-decay floor. Used by the exit-code tests below.
fn sampled_window(decay_q: f64) -> String {
    let t: Vec<f64> = (0..41).map(|i| -1.0 + 2.0 * i as f64 / 40.0).collect();
    let g: Vec<f64> = t
        .iter()
        .map(|x| (std::f64::consts::FRAC_PI_2 * x).cos().powi(2))
        .collect();
    serde_json::json!({
        "family": "samples",
        "params": { "t": t, "g": g, "decay_q": decay_q },
        "tau": 1.0
    })
    .to_string()
}

#[test]
fn help_and_version_exit_zero() {
    let help = qei(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("bound"));

    let version = qei(&["--version"]);
    assert_eq!(version.status.code(), Some(0));

    let sub = qei(&["scaling", "--help"]);
    assert_eq!(sub.status.code(), Some(0));
}

#[test]
fn missing_required_field_names_its_path() {
    let out = qei(&["bound", "--weight", "gaussian"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_text(&out);
    assert!(err.contains("config.mass"), "stderr: {err}");
    assert!(err.contains("missing"), "stderr: {err}");
}

#[test]
fn unknown_weight_family_lists_the_choices() {
    let out = qei(&["bound", "--weight", "sinc", "--mass", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_text(&out);
    assert!(err.contains("gaussian, cos2, bump"), "stderr: {err}");
}

#[test]
fn bad_tau_is_reported_under_its_path() {
    let out = qei(&["bound", "--weight", "gaussian", "--tau", "-1", "--mass", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_text(&out);
    assert!(err.contains("config.tau"), "stderr: {err}");
}

#[test]
fn flags_conflict_with_config() {
    let out = qei(&["bound", "--config", "{}", "--mass", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_text(&out);
    assert!(err.contains("cannot be used with"), "stderr: {err}");
}

#[test]
fn records_are_reproducible_byte_for_byte() {
    let args = ["bound", "--weight", "gaussian", "--mass", "0.5"];
    let first = qei(&args);
    let second = qei(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(second.status.code(), Some(0));
    let a = stdout_json(&first);
    let b = stdout_json(&second);
    // The record is a pure function of the config; only meta may differ.
    assert_eq!(
        serde_json::to_string(&a["record"]).unwrap(),
        serde_json::to_string(&b["record"]).unwrap()
    );
    assert!(a["meta"]["wall_time_ms"].is_u64());
    assert_eq!(a["record"]["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn config_file_and_inline_config_agree() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bound.json");
    let body = r#"{"command":"bound","weight":"cos2","mass":1.0}"#;
    std::fs::write(&path, body).unwrap();

    let from_file = qei(&["bound", "--config", path.to_str().unwrap()]);
    let inline = qei(&["bound", "--config", body]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(inline.status.code(), Some(0));
    assert_eq!(
        serde_json::to_string(&stdout_json(&from_file)["record"]).unwrap(),
        serde_json::to_string(&stdout_json(&inline)["record"]).unwrap()
    );
}

#[test]
fn config_written_for_another_command_is_rejected() {
    let out = qei(&["bound", "--config", r#"{"command":"gff","weight":"gaussian","mass":1.0}"#]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_text(&out);
    assert!(err.contains("config.command"), "stderr: {err}");
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = qei(&[
        "bound",
        "--weight",
        "gaussian",
        "--mass",
        "0",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let body: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(body["record"]["results"]["q_value"].as_f64().unwrap() > 0.0);
}

#[test]
fn scaling_csv_matches_the_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("curve.csv");
    let out = qei(&[
        "scaling",
        "--weight",
        "gaussian",
        "--mass",
        "0",
        "--tau",
        "0.25:4:16",
        "--fit",
        "all",
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_text(&out));
    let report = stdout_json(&out);
    let taus = report["record"]["results"]["tau"].as_array().unwrap();
    let bounds = report["record"]["results"]["bound"].as_array().unwrap();
    assert_eq!(taus.len(), 16);

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("tau,bound,error"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 16);
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 3);
        // 17 significant digits: the CSV round-trips to the exact f64.
        assert_eq!(cells[0], taus[i].as_f64().unwrap(), "row {i} tau");
        assert_eq!(cells[1], bounds[i].as_f64().unwrap(), "row {i} bound");
    }
    // Grid endpoints are pinned exactly, not recomputed through logs.
    assert_eq!(taus[0].as_f64().unwrap(), 0.25);
    assert_eq!(taus[15].as_f64().unwrap(), 4.0);
}

#[test]
fn divergent_sequence_exits_two() {
    let out = qei(&["nuclearity", "--spectrum", r#"{"kind":"log"}"#, "--beta", "0.5"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_text(&out));
    assert!(stderr_text(&out).contains("divergence"), "stderr: {}", stderr_text(&out));
}

#[test]
fn undecaying_weight_exits_two() {
    // A declared decay floor of u^-1.2 cannot integrate the fourth moment.
    let w = sampled_window(1.2);
    let out = qei(&["bound", "--weight", &w, "--mass", "0"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_text(&out));
    assert!(stderr_text(&out).contains("fourth moment"), "stderr: {}", stderr_text(&out));
}

#[test]
fn uncertifiable_tolerance_exits_three() {
    // With only a cubic decay floor the tail enclosure cannot reach 1e-12.
    let w = sampled_window(3.0);
    let out = qei(&["bound", "--weight", &w, "--mass", "0", "--rel-tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_text(&out));
    assert!(stderr_text(&out).contains("converge"), "stderr: {}", stderr_text(&out));
}

#[test]
fn validate_normalizes_and_the_echo_reenters() {
    let out = qei(&[
        "validate",
        r#"{"command":"scaling","weight":"gaussian","mass":1.0,"tau":"0.5:2:4"}"#,
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_text(&out));
    let normalized = stdout_json(&out);
    assert_eq!(normalized["fit"], "all");
    assert_eq!(normalized["tau"]["count"], 4);
    assert_eq!(normalized["rel_tol"].as_f64().unwrap(), 1e-9);

    // The normalized echo is itself a valid config for the same command.
    let echoed = normalized.to_string();
    let rerun = qei(&["scaling", "--config", &echoed]);
    assert_eq!(rerun.status.code(), Some(0), "stderr: {}", stderr_text(&rerun));
    let report = stdout_json(&rerun);
    assert_eq!(report["record"]["results"]["tau"].as_array().unwrap().len(), 4);
}

#[test]
fn validate_reports_every_defect_at_once() {
    let out = qei(&[
        "validate",
        r#"{"command":"bound","weight":"gaussian","mass":-1.0,"rel_tol":2.0}"#,
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_text(&out);
    assert!(err.contains("config.mass"), "stderr: {err}");
    assert!(err.contains("config.rel_tol"), "stderr: {err}");
}
