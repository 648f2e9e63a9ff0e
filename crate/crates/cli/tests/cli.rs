//! End-to-end runs of the installed binary against temporary workspaces.

use std::path::Path;
use std::process::{Command, Output};

fn l3watch(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_l3watch"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn assert_ok(output: &Output) {
    assert!(
        output.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        stdout(output),
        stderr(output)
    );
}

/// Builds the 1016-record, 20-attack trace used across the tests.
fn build_attack_trace(dir: &Path) {
    assert_ok(&l3watch(
        dir,
        &[
            "gen", "--ues", "4", "--sessions", "23", "--seed", "1", "--records", "996",
            "--out", "benign.jsonl",
        ],
    ));
    assert_ok(&l3watch(
        dir,
        &[
            "inject", "--trace", "benign.jsonl", "--out", "attack.jsonl", "--count", "20",
            "--min-gap", "10", "--seed", "1",
        ],
    ));
}

#[test]
fn gen_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.jsonl", "b.jsonl"] {
        assert_ok(&l3watch(
            dir.path(),
            &["gen", "--ues", "2", "--sessions", "3", "--seed", "9", "--out", name],
        ));
    }
    let a = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    let b = std::fs::read(dir.path().join("b.jsonl")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn oracle_run_reports_perfect_detection_and_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    build_attack_trace(dir.path());

    let output = l3watch(
        dir.path(),
        &[
            "run", "--trace", "attack.jsonl", "--detector", "oracle", "--w", "1", "--out",
            "results.json",
        ],
    );
    assert_ok(&output);
    let text = stdout(&output);
    assert!(text.contains("windows=1016"), "stdout: {text}");
    assert!(text.contains("attacked=20"), "stdout: {text}");
    assert!(text.contains("f1=1.000"), "stdout: {text}");
    assert!(text.contains("latency[compute]"), "stdout: {text}");

    let manifest_text =
        std::fs::read_to_string(dir.path().join("results.json.manifest.json")).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&manifest_text).unwrap();
    assert_eq!(manifest["command"], "run");
    assert_eq!(manifest["config"]["detector"], "oracle");
    assert_eq!(manifest["inputs"][0]["path"], "attack.jsonl");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["timings_ms"]["total"].as_f64().unwrap() > 0.0);

    let results: serde_json::Value =
        std::fs::read_to_string(dir.path().join("results.json"))
            .map(|t| serde_json::from_str(&t).unwrap())
            .unwrap();
    assert_eq!(results[0]["counts"]["true_positives"], 20);
    assert_eq!(results[0]["counts"]["false_negatives"], 0);
}

#[test]
fn disabling_retrieval_degrades_recall_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    build_attack_trace(dir.path());

    let output = l3watch(
        dir.path(),
        &["run", "--trace", "attack.jsonl", "--detector", "oracle", "--no-prev"],
    );
    assert_ok(&output);
    let text = stdout(&output);
    assert!(text.contains("recall=0.000"), "stdout: {text}");
    assert!(text.contains("accuracy=0.980"), "stdout: {text}");
}

#[test]
fn sweep_covers_every_requested_window_size() {
    let dir = tempfile::tempdir().unwrap();
    build_attack_trace(dir.path());

    let output = l3watch(
        dir.path(),
        &[
            "sweep", "--trace", "attack.jsonl", "--w", "1..10", "--detector", "oracle",
            "--out", "sweep.csv", "--results", "sweep.json",
        ],
    );
    assert_ok(&output);
    let table = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 11, "header plus ten rows:\n{table}");
    assert!(lines[0].starts_with("w,windows,attacked"));
    for (idx, line) in lines[1..].iter().enumerate() {
        let w = idx + 1;
        let prefix = format!("{},{},{}", w, 1016 - w + 1, 20 * w);
        assert!(line.starts_with(&prefix), "row {w}: {line}");
    }
}

#[test]
fn mutation_does_not_change_oracle_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    build_attack_trace(dir.path());

    assert_ok(&l3watch(
        dir.path(),
        &["mutate", "--trace", "attack.jsonl", "--out", "evasive.jsonl", "--attacked"],
    ));
    let output = l3watch(
        dir.path(),
        &["run", "--trace", "evasive.jsonl", "--detector", "oracle"],
    );
    assert_ok(&output);
    assert!(stdout(&output).contains("f1=1.000"), "stdout: {}", stdout(&output));
}

#[test]
fn mock_detector_replays_canned_responses() {
    let dir = tempfile::tempdir().unwrap();
    build_attack_trace(dir.path());
    std::fs::write(
        dir.path().join("replay.jsonl"),
        "{\"key\": \"*\", \"response\": \"Normal\"}\n",
    )
    .unwrap();

    let output = l3watch(
        dir.path(),
        &[
            "run", "--trace", "attack.jsonl", "--detector", "mock:replay.jsonl", "--mode",
            "custom-cot",
        ],
    );
    assert_ok(&output);
    let text = stdout(&output);
    assert!(text.contains("tp=0"), "stdout: {text}");
    assert!(text.contains("fn=20"), "stdout: {text}");
    assert!(text.contains("f1=0.000"), "stdout: {text}");
    assert!(text.contains("latency[replay]"), "stdout: {text}");
}

#[test]
fn lint_groups_reference_descriptions() {
    let dir = tempfile::tempdir().unwrap();
    let short = "The adversary sends a RRCSetupRequest using a TMSI value of an existing \
                 connection and a new RNTI value.";
    let long = "The adversary assumes the victim's TMSI, sends a RRCSetupRequest to the base \
                station, and the base station, without integrity protection, deletes the \
                victim's RRC security context due to the impersonation of the victim UE, thus \
                disconnecting the victim from the network.";
    let mut lines = String::new();
    for (name, body) in [("short", short), ("long", long)] {
        lines.push_str(
            &serde_json::to_string(&serde_json::json!({ "name": name, "body": body })).unwrap(),
        );
        lines.push('\n');
    }
    std::fs::write(dir.path().join("descs.jsonl"), lines).unwrap();

    let output = l3watch(
        dir.path(),
        &[
            "lint", "--desc", "descs.jsonl", "--complete", "--out", "completed.jsonl",
        ],
    );
    assert_ok(&output);
    let text = stdout(&output);
    assert!(text.contains("Closely aligned"), "stdout: {text}");
    assert!(text.contains("Directly aligned"), "stdout: {text}");

    // Completion must lift the short description into the top group.
    let second = l3watch(dir.path(), &["lint", "--desc", "completed.jsonl"]);
    assert_ok(&second);
    let relinted = stdout(&second);
    assert!(!relinted.contains("Closely aligned"), "stdout: {relinted}");
    assert!(relinted.matches("Directly aligned").count() >= 2, "stdout: {relinted}");
}

#[test]
fn report_renders_tables_from_stored_results() {
    let dir = tempfile::tempdir().unwrap();
    build_attack_trace(dir.path());
    assert_ok(&l3watch(
        dir.path(),
        &[
            "sweep", "--trace", "attack.jsonl", "--w", "1,2", "--detector", "oracle",
            "--out", "sweep.csv", "--results", "runs.json",
        ],
    ));

    let output = l3watch(
        dir.path(),
        &["report", "--results", "runs.json", "--out-dir", "reports"],
    );
    assert_ok(&output);
    let sweep = std::fs::read_to_string(dir.path().join("reports/sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 3);
    let latency = std::fs::read_to_string(dir.path().join("reports/latency.csv")).unwrap();
    assert!(latency.starts_with("metric,w1,w2"), "latency table: {latency}");
    assert!(latency.contains("under_bound_pct"));
}

#[test]
fn study_emits_tables_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&l3watch(
        dir.path(),
        &["gen", "--ues", "2", "--sessions", "6", "--seed", "3", "--out", "b.jsonl"],
    ));
    assert_ok(&l3watch(
        dir.path(),
        &[
            "inject", "--trace", "b.jsonl", "--out", "t.jsonl", "--count", "4", "--min-gap",
            "5", "--seed", "3",
        ],
    ));
    let mut lines = String::new();
    for body in [
        "The attacker spoofs the TMSI of a victim with an existing connection and sends an \
         RRCSetupRequest.",
        "The adversary floods the cell with traffic.",
    ] {
        lines.push_str(
            &serde_json::to_string(&serde_json::json!({ "name": "Blind DoS", "body": body }))
                .unwrap(),
        );
        lines.push('\n');
    }
    std::fs::write(dir.path().join("descs.jsonl"), lines).unwrap();

    let output = l3watch(
        dir.path(),
        &[
            "study", "--trace", "t.jsonl", "--desc", "descs.jsonl", "--detector", "oracle",
            "--seed", "11", "--out-dir", "study",
        ],
    );
    assert_ok(&output);
    for name in ["entries.csv", "groups.csv", "correlations.csv", "study.json"] {
        assert!(
            dir.path().join("study").join(name).exists(),
            "missing artifact {name}"
        );
    }
    let text = stdout(&output);
    assert!(text.contains("directly_aligned"), "stdout: {text}");
    assert!(text.contains("mean_completion_gain="), "stdout: {text}");
    // The oracle scores every description identically, so the rank
    // correlations are undefined rather than numeric.
    assert!(text.contains("spearman(predicates,f1)=undefined"), "stdout: {text}");
}

#[test]
fn window_dump_shows_formatted_messages() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&l3watch(
        dir.path(),
        &["gen", "--ues", "1", "--sessions", "1", "--seed", "5", "--out", "one.jsonl"],
    ));
    assert_ok(&l3watch(
        dir.path(),
        &[
            "run", "--trace", "one.jsonl", "--detector", "oracle", "--w", "2",
            "--dump-windows", "windows.jsonl",
        ],
    ));
    let dump = std::fs::read_to_string(dir.path().join("windows.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(dump.lines().next().unwrap()).unwrap();
    let new_message = first["new_message"].as_str().unwrap();
    assert!(new_message.contains("(New message)"), "line: {first}");
    assert!(new_message.contains("with RNTI"), "line: {first}");
    assert_eq!(first["history"].as_array().unwrap().len(), 1);
}

#[test]
fn failures_exit_nonzero_with_a_single_error_line() {
    let dir = tempfile::tempdir().unwrap();
    build_attack_trace(dir.path());

    let unknown = l3watch(
        dir.path(),
        &["run", "--trace", "attack.jsonl", "--detector", "bogus"],
    );
    assert!(!unknown.status.success());
    let err = stderr(&unknown);
    assert!(err.starts_with("error: "), "stderr: {err}");
    assert_eq!(err.trim_end().lines().count(), 1, "stderr: {err}");

    let missing = l3watch(dir.path(), &["run", "--trace", "nope.jsonl"]);
    assert!(!missing.status.success());
    assert!(stderr(&missing).starts_with("error: "), "stderr: {}", stderr(&missing));

    let chat_without_endpoint = l3watch(
        dir.path(),
        &["run", "--trace", "attack.jsonl", "--detector", "chat"],
    );
    assert!(!chat_without_endpoint.status.success());
    assert!(
        stderr(&chat_without_endpoint).contains("--endpoint"),
        "stderr: {}",
        stderr(&chat_without_endpoint)
    );
}
