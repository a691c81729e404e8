//! Golden-file tests of the `mixmarket` binary. Set `UPDATE_GOLDEN=1` to
//! rewrite the expected files after an intended change.

use std::path::{Path, PathBuf};
use std::process::Command;

use mixmarket::closed::solve_cutoff_closed;
use mixmarket_cli::commands::SWEEP_COLUMNS;
use mixmarket_cli::scenario;

const COMMANDS: [&str; 5] = ["solve-closed", "solve-open", "statics", "sweep", "verify"];

fn tests_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

struct Run {
    code: i32,
    report: Option<String>,
    stderr: String,
}

fn run(command: &str, fixture: &str, format: &str) -> Run {
    let dir = tests_dir().join("fixtures").join(command);
    let out_dir = tempfile::tempdir().unwrap();
    let out = out_dir.path().join("report");
    let result = Command::new(env!("CARGO_BIN_EXE_mixmarket"))
        .current_dir(&dir)
        .args([command, &format!("{fixture}.toml"), "--format", format, "--out"])
        .arg(&out)
        .output()
        .unwrap();
    Run {
        code: result.status.code().expect("exited normally"),
        report: std::fs::read_to_string(&out).ok(),
        stderr: String::from_utf8(result.stderr).unwrap(),
    }
}

fn check_golden(name: &str, actual: &str) {
    let path = tests_dir().join("golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden file {} ({e}); rerun with UPDATE_GOLDEN=1", path.display()));
    assert_eq!(actual, expected, "output differs from {}", path.display());
}

fn check_case(command: &str, fixture: &str, expected_code: i32) {
    for format in ["json", "csv"] {
        let r = run(command, fixture, format);
        assert_eq!(r.code, expected_code, "{command} {fixture} --format {format}: {}", r.stderr);
        match &r.report {
            Some(report) => {
                assert_ne!(expected_code, 1, "input errors must not write a report");
                check_golden(&format!("{command}/{fixture}.{format}"), report);
            }
            None => assert_eq!(expected_code, 1, "{command} {fixture} wrote no report"),
        }
        check_golden(&format!("{command}/{fixture}.stderr"), &r.stderr);
    }
}

#[test]
fn solve_closed_goldens() {
    check_case("solve-closed", "feasible", 0);
    check_case("solve-closed", "infeasible", 2);
    check_case("solve-closed", "malformed", 1);
}

#[test]
fn solve_open_goldens() {
    check_case("solve-open", "feasible", 0);
    check_case("solve-open", "infeasible", 2);
    check_case("solve-open", "malformed", 1);
}

#[test]
fn statics_goldens() {
    check_case("statics", "feasible", 0);
    check_case("statics", "infeasible", 2);
    check_case("statics", "malformed", 1);
}

#[test]
fn sweep_goldens() {
    check_case("sweep", "feasible", 0);
    check_case("sweep", "infeasible", 2);
    check_case("sweep", "malformed", 1);
}

#[test]
fn verify_goldens() {
    check_case("verify", "feasible", 0);
    check_case("verify", "infeasible", 2);
    check_case("verify", "malformed", 1);
    check_case("verify", "tight", 3);
}

#[test]
fn every_command_has_three_fixtures() {
    for command in COMMANDS {
        for fixture in ["feasible", "infeasible", "malformed"] {
            assert!(tests_dir().join("fixtures").join(command).join(format!("{fixture}.toml")).exists());
        }
    }
}

#[test]
fn sweep_header_is_fixed() {
    let r = run("sweep", "feasible", "csv");
    let report = r.report.unwrap();
    let header = report.lines().next().unwrap();
    assert_eq!(header, "tau,rho,c_D,c_X,M,M_D,M_E,dM_dtau_implicit,dMD_dtau,prop2,prop3,status");
    assert_eq!(header, SWEEP_COLUMNS.join(","));
    // One row per grid point.
    assert_eq!(report.lines().count(), 1 + 12);
    let infeasible = run("sweep", "infeasible", "csv").report.unwrap();
    let flagged: Vec<&str> = infeasible.lines().skip(1).filter(|l| !l.ends_with(",ok")).collect();
    assert!(!flagged.is_empty());
    for line in flagged {
        assert!(line.contains(",NA,NA,"), "{line}");
    }
}

#[test]
fn closed_cutoff_passes_through_bit_for_bit() {
    let r = run("solve-closed", "feasible", "json");
    let json: serde_json::Value = serde_json::from_str(&r.report.unwrap()).unwrap();
    assert_eq!(json["schema"], 1);
    let reported = json["c_D"].as_f64().unwrap();
    let path = tests_dir().join("fixtures/solve-closed/feasible.toml");
    let s = scenario::load(&path).unwrap();
    assert_eq!(reported.to_bits(), solve_cutoff_closed(&s.params).unwrap().to_bits());

    let csv = run("solve-closed", "feasible", "csv").report.unwrap();
    let first: f64 = csv.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert_eq!(first.to_bits(), reported.to_bits());
}

#[test]
fn infeasible_report_names_failed_condition() {
    let r = run("solve-closed", "infeasible", "json");
    let json: serde_json::Value = serde_json::from_str(&r.report.unwrap()).unwrap();
    let failed: Vec<&str> = json["feasibility"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["binding"] == true && c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, vec!["large firms active (C < c_D)"]);
    assert!(r.stderr.contains("large firms active (C < c_D)"));
}

#[test]
fn missing_key_is_named_in_diagnostics() {
    let r = run("solve-closed", "malformed", "json");
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("alpha"));
}

#[test]
fn tight_tolerance_states_deltas() {
    let r = run("verify", "tight", "json");
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("relative gap"));
    let json: serde_json::Value = serde_json::from_str(&r.report.unwrap()).unwrap();
    assert_eq!(json["pass"], false);
}

#[test]
fn refinement_table_is_monotone() {
    let r = run("verify", "feasible", "json");
    let json: serde_json::Value = serde_json::from_str(&r.report.unwrap()).unwrap();
    for economy in json["economies"].as_array().unwrap() {
        assert_eq!(economy["refinement_monotone"], true);
        let nodes: Vec<u64> = economy["refinement"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["nodes"].as_u64().unwrap())
            .collect();
        assert_eq!(nodes, vec![250, 500, 1000, 2000]);
    }
}

#[test]
fn statics_rejects_free_trade_as_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("free.toml");
    let text = std::fs::read_to_string(tests_dir().join("fixtures/statics/feasible.toml"))
        .unwrap()
        .replace("tau = 1.5", "tau = 1.0");
    std::fs::write(&path, text).unwrap();
    let result = Command::new(env!("CARGO_BIN_EXE_mixmarket"))
        .args(["statics"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(1));
    assert!(result.stdout.is_empty());
}

#[test]
fn usage_errors_exit_one() {
    let result = Command::new(env!("CARGO_BIN_EXE_mixmarket")).arg("bogus").output().unwrap();
    assert_eq!(result.status.code(), Some(1));
    let help = Command::new(env!("CARGO_BIN_EXE_mixmarket")).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn stdout_matches_file_output() {
    let dir = tests_dir().join("fixtures").join("solve-open");
    let result = Command::new(env!("CARGO_BIN_EXE_mixmarket"))
        .current_dir(&dir)
        .args(["solve-open", "feasible.toml"])
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(0));
    let file = run("solve-open", "feasible", "json").report.unwrap();
    assert_eq!(String::from_utf8(result.stdout).unwrap(), file);
}
