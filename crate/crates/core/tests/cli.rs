use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_marginal-gme"));
    c.env_remove("MARGINAL_GME_BACKEND");
    c
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("marginal-gme-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Runs with `--out` and returns the exit code and the parsed report.
fn run(args: &[&str], name: &str) -> (i32, Option<Value>) {
    let out = scratch(name);
    let _ = std::fs::remove_file(&out);
    let status = bin().args(args).arg("--out").arg(&out).status().unwrap();
    let report = std::fs::read_to_string(&out)
        .ok()
        .map(|s| serde_json::from_str(&s).unwrap());
    (status.code().unwrap(), report)
}

#[test]
fn catalog_list_embeds_version_and_config() {
    let (code, report) = run(&["catalog", "list"], "list.json");
    assert_eq!(code, 0);
    let r = report.unwrap();
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["config"]["command"], "catalog list");
    assert_eq!(r["result"].as_array().unwrap().len(), 12);
}

#[test]
fn verify_passes_on_detected_and_control_states() {
    let (code, report) = run(&["verify", "eq5"], "verify-eq5.json");
    assert_eq!(code, 0);
    assert_eq!(report.unwrap()["result"]["passed"], true);
    let (code, report) = run(&["verify", "ghz3"], "verify-ghz3.json");
    assert_eq!(code, 0);
    let r = report.unwrap();
    assert_eq!(r["result"]["marginal_witness"]["detection"], "not_detected");
}

#[test]
fn exported_state_files_are_accepted() {
    let file = scratch("appA-state.json");
    let (code, report) = run(&["catalog", "export", "appA"], "export.json");
    assert_eq!(code, 0);
    std::fs::write(&file, report.unwrap()["result"].to_string()).unwrap();
    let (code, report) = run(&["audit", file.to_str().unwrap()], "audit-file.json");
    assert_eq!(code, 0);
    assert_eq!(report.unwrap()["result"]["all_ppt"], true);
}

#[test]
fn undetected_tolerance_exits_two() {
    let (code, report) = run(&["tolerance", "ghz3"], "tol-ghz3.json");
    assert_eq!(code, 2);
    assert_eq!(report.unwrap()["result"]["p_star"], 0.0);
}

#[test]
fn input_errors_exit_four() {
    assert_eq!(run(&["search", "--dims", "2,2,2"], "noseed.json").0, 4);
    assert_eq!(run(&["verify", "no-such-state"], "nostate.json").0, 4);
    assert_eq!(
        run(&["audit", "eq5", "--pattern", "AZ"], "badpattern.json").0,
        4
    );
    let cfg = scratch("typo.json");
    std::fs::write(&cfg, r#"{"dims": [2, 2, 2], "sede": 1}"#).unwrap();
    assert_eq!(
        run(&["search", cfg.to_str().unwrap()], "typo-out.json").0,
        4
    );
    assert_eq!(bin().arg("frobnicate").status().unwrap().code(), Some(4));
}

#[test]
fn unknown_backend_is_an_input_error() {
    let out = scratch("backend.json");
    let status = bin()
        .env("MARGINAL_GME_BACKEND", "nonesuch")
        .args(["verify", "eq5", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
}

#[test]
fn stalled_search_exits_two() {
    let (code, report) = run(
        &[
            "search",
            "--dims",
            "2,2,2",
            "--seed",
            "1",
            "--pattern",
            "AB",
            "--max-rounds",
            "5",
        ],
        "stall.json",
    );
    assert_eq!(code, 2);
    assert_eq!(report.unwrap()["result"]["outcome"]["status"], "stalled");
}

#[test]
fn search_reports_reproduce_from_their_config() {
    let (code, first) = run(&["search", "--dims", "2,2,2", "--seed", "3"], "s3.json");
    assert_eq!(code, 0);
    let first = first.unwrap();
    let mut config = first["config"].clone();
    config.as_object_mut().unwrap().remove("output");
    let cfg = scratch("s3-config.json");
    std::fs::write(&cfg, config.to_string()).unwrap();
    let (code, second) = run(&["search", cfg.to_str().unwrap()], "s3-again.json");
    assert_eq!(code, 0);
    assert_eq!(first["result"], second.unwrap()["result"]);

    let (_, other) = run(&["search", "--dims", "2,2,2", "--seed", "8"], "s8.json");
    assert!(other.is_some());
    let out = bin()
        .args(["report", "--markdown"])
        .arg(scratch("s3.json"))
        .arg(scratch("s8.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(
        table.lines().any(|l| l.starts_with("| 2x2x2 | 2 |")),
        "{table}"
    );
}

#[test]
fn uniqueness_and_localizable_commands() {
    let (code, report) = run(&["uniqueness", "appA"], "uq.json");
    assert_eq!(code, 0);
    assert_eq!(report.unwrap()["result"]["verdict"], "unique");
    let (code, report) = run(
        &[
            "localizable",
            "ghz3",
            "--party",
            "2",
            "--grid",
            "10x20",
            "--jobs",
            "2",
        ],
        "loc.json",
    );
    assert_eq!(code, 0);
    let r = report.unwrap();
    assert!(r["result"]["minimum"].as_f64().unwrap() < 0.0);
    assert_eq!(r["config"]["jobs"], 2);
}
