//! End-to-end checks of the command-line interface using the built binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn jurisim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jurisim"))
        .args(args)
        .current_dir(dir)
        .env_remove("JURISIM_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn full_run_writes_outputs_and_audit_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let run = jurisim(&["run", "--out", "run1"], dir.path());
    assert!(run.status.success(), "run failed: {}", stderr(&run));
    for file in [
        "results.json",
        "timings.json",
        "tables.txt",
        "tables.csv",
        "audit_records.jsonl",
        "audit_manifest.json",
    ] {
        assert!(dir.path().join("run1").join(file).exists(), "{file} missing");
    }
    let results_text = fs::read_to_string(dir.path().join("run1/results.json")).unwrap();
    assert!(results_text.contains("\"seed\": 4242"));
    assert!(results_text.contains("config_hash"));

    // Untouched export verifies.
    let verify = jurisim(
        &[
            "verify-audit",
            "--records",
            "run1/audit_records.jsonl",
            "--manifest",
            "run1/audit_manifest.json",
        ],
        dir.path(),
    );
    assert!(verify.status.success(), "{}", stderr(&verify));
    assert!(stdout(&verify).contains("verified 500 audit records"));

    // One edited record line fails, naming the index.
    let records_path = dir.path().join("run1/audit_records.jsonl");
    let records = fs::read_to_string(&records_path).unwrap();
    let mut lines: Vec<String> = records.lines().map(String::from).collect();
    lines[17] = lines[17].replace("\"origin\":\"", "\"origin\":\"X");
    fs::write(
        dir.path().join("tampered.jsonl"),
        lines.join("\n") + "\n",
    )
    .unwrap();
    let tampered = jurisim(
        &[
            "verify-audit",
            "--records",
            "tampered.jsonl",
            "--manifest",
            "run1/audit_manifest.json",
        ],
        dir.path(),
    );
    assert!(!tampered.status.success());
    assert!(
        stderr(&tampered).contains("17"),
        "diagnostic should name index 17: {}",
        stderr(&tampered)
    );

    // A truncated export is a parse error.
    fs::write(dir.path().join("truncated.jsonl"), &records[..records.len() - 25]).unwrap();
    let truncated = jurisim(
        &[
            "verify-audit",
            "--records",
            "truncated.jsonl",
            "--manifest",
            "run1/audit_manifest.json",
        ],
        dir.path(),
    );
    assert!(!truncated.status.success());

    // Tables re-render from the results file, matching the written copy.
    let tables = jurisim(
        &["tables", "--results", "run1/results.json"],
        dir.path(),
    );
    assert!(tables.status.success());
    let written = fs::read_to_string(dir.path().join("run1/tables.txt")).unwrap();
    assert_eq!(stdout(&tables), written);
    let csv = jurisim(
        &["tables", "--results", "run1/results.json", "--format", "csv"],
        dir.path(),
    );
    let written_csv = fs::read_to_string(dir.path().join("run1/tables.csv")).unwrap();
    assert_eq!(stdout(&csv), written_csv);
}

#[test]
fn identical_seeds_reproduce_byte_identical_results() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let run = jurisim(
            &["run", "--out", out, "--scenario", "a", "--seed", "99"],
            dir.path(),
        );
        assert!(run.status.success(), "{}", stderr(&run));
    }
    let a = fs::read(dir.path().join("a/results.json")).unwrap();
    let b = fs::read(dir.path().join("b/results.json")).unwrap();
    assert_eq!(a, b);

    let c = jurisim(
        &["run", "--out", "c", "--scenario", "a", "--seed", "100"],
        dir.path(),
    );
    assert!(c.status.success());
    let c_bytes = fs::read(dir.path().join("c/results.json")).unwrap();
    assert_ne!(a, c_bytes);
}

#[test]
fn scenario_and_variant_filters_limit_rows() {
    let dir = tempfile::tempdir().unwrap();
    let run = jurisim(
        &[
            "run",
            "--out",
            "f",
            "--scenario",
            "a",
            "--variant",
            "proposed",
            "--variant",
            "standard-encryption",
        ],
        dir.path(),
    );
    assert!(run.status.success(), "{}", stderr(&run));
    let results = fs::read_to_string(dir.path().join("f/results.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&results).unwrap();
    assert_eq!(parsed["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_config_path_exits_nonzero_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let run = jurisim(&["run", "--config", "missing-config.toml"], dir.path());
    assert_eq!(run.status.code(), Some(2));
    assert!(
        stderr(&run).contains("missing-config.toml"),
        "diagnostic should name the path: {}",
        stderr(&run)
    );
}
