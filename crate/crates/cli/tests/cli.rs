//! End-to-end tests that drive the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pgsi"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

/// Generates an instance into `dir`, returning the game and init paths.
fn generate(dir: &Path, family: &str, n: u32) -> (String, String) {
    let game = path_str(dir, &format!("{family}{n}.txt"));
    let init = path_str(dir, &format!("{family}{n}.init.json"));
    let out = run_in(
        dir,
        &[
            "generate", "--family", family, "--n", &n.to_string(), "--out", &game, "--init-out",
            &init,
        ],
    );
    assert!(out.status.success(), "generate failed: {out:?}");
    (game, init)
}

#[test]
fn generate_writes_game_and_init() {
    let dir = tempfile::tempdir().unwrap();
    let (game, init) = generate(dir.path(), "loc", 1);
    let text = std::fs::read_to_string(game).unwrap();
    assert!(text.starts_with("parity 13;\n"));
    assert_eq!(text.lines().count(), 15);
    let init: Value = serde_json::from_str(&std::fs::read_to_string(init).unwrap()).unwrap();
    assert!(init.as_object().unwrap().len() > 0);
}

#[test]
fn generate_glo_one_has_twenty_one_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let (game, _) = generate(dir.path(), "glo", 1);
    let text = std::fs::read_to_string(game).unwrap();
    // Header plus one line per node.
    assert_eq!(text.lines().count(), 22);
    assert!(text.starts_with("parity 20;\n"));
}

#[test]
fn drop_top_edge_rejected_outside_loc() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "generate", "--family", "glo", "--n", "1", "--drop-top-edge", "--out", "no.txt",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_reports_iterations_and_winning_sets() {
    let dir = tempfile::tempdir().unwrap();
    let (game, init) = generate(dir.path(), "loc", 3);
    let trace = path_str(dir.path(), "trace.json");
    let out = run_in(
        dir.path(),
        &[
            "solve", "--game", &game, "--init", &init, "--policy", "local", "--trace-out", &trace,
        ],
    );
    assert!(out.status.success(), "solve failed: {out:?}");
    let report = stdout_json(&out);
    assert!(report["iterations"].as_u64().unwrap() >= 8);
    assert_eq!(report["w0"].as_array().unwrap().len(), 0);
    assert_eq!(report["w1"].as_array().unwrap().len(), 34);
    let trace: Value =
        serde_json::from_str(&std::fs::read_to_string(trace).unwrap()).unwrap();
    let steps = trace.as_array().unwrap();
    assert_eq!(
        steps.len() as u64,
        report["iterations"].as_u64().unwrap() + 1
    );
    // The last step is the fixpoint.
    assert_eq!(
        steps
            .last()
            .unwrap()["improving_switches"]
            .as_array()
            .unwrap()
            .len(),
        0
    );
}

#[test]
fn solve_trace_carries_phases_when_family_given() {
    let dir = tempfile::tempdir().unwrap();
    let (game, init) = generate(dir.path(), "loc", 2);
    let trace = path_str(dir.path(), "trace.json");
    let out = run_in(
        dir.path(),
        &[
            "solve", "--game", &game, "--init", &init, "--policy", "local", "--trace-out", &trace,
            "--family", "loc", "--n", "2", "--full-trace",
        ],
    );
    assert!(out.status.success());
    let trace: Value =
        serde_json::from_str(&std::fs::read_to_string(trace).unwrap()).unwrap();
    let first = &trace.as_array().unwrap()[0];
    assert_eq!(first["phase"], "1");
    assert_eq!(first["b_bits"], "00");
    assert_eq!(first["valuations"].as_array().unwrap().len(), 24);
}

#[test]
fn unknown_policy_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (game, _) = generate(dir.path(), "loc", 1);
    let out = run_in(dir.path(), &["solve", "--game", &game, "--policy", "bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_game_file_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "parity 1;\n0 3 0 1;\n1 not-a-number 1 0;\n").unwrap();
    let out = run_in(
        dir.path(),
        &["solve", "--game", bad.to_str().unwrap(), "--policy", "local"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_game_file_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["solve", "--game", "absent.txt", "--policy", "local"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn iteration_cap_exits_with_resource_code() {
    let dir = tempfile::tempdir().unwrap();
    let (game, init) = generate(dir.path(), "loc", 3);
    let out = run_in(
        dir.path(),
        &[
            "solve", "--game", &game, "--init", &init, "--policy", "local", "--max-iterations",
            "2",
        ],
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn trace_check_counts_counter_values() {
    let dir = tempfile::tempdir().unwrap();
    let (game, init) = generate(dir.path(), "loc", 4);
    let trace = path_str(dir.path(), "trace.json");
    let out = run_in(
        dir.path(),
        &[
            "solve", "--game", &game, "--init", &init, "--policy", "local", "--trace-out", &trace,
        ],
    );
    assert!(out.status.success());
    let out = run_in(
        dir.path(),
        &[
            "trace-check", "--family", "loc", "--n", "4", "--trace", &trace,
        ],
    );
    assert!(out.status.success(), "trace-check failed: {out:?}");
    let report = stdout_json(&out);
    assert_eq!(report["ok"], true);
    assert_eq!(report["values"], serde_json::json!([0, 1, 2, 3]));
}

#[test]
fn trace_check_rejects_truncated_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (game, init) = generate(dir.path(), "loc", 4);
    let trace_path = dir.path().join("trace.json");
    let out = run_in(
        dir.path(),
        &[
            "solve", "--game", &game, "--init", &init, "--policy", "local", "--trace-out",
            trace_path.to_str().unwrap(),
        ],
    );
    assert!(out.status.success());
    let full: Value =
        serde_json::from_str(&std::fs::read_to_string(&trace_path).unwrap()).unwrap();
    let half: Vec<Value> = full.as_array().unwrap()[..8].to_vec();
    std::fs::write(&trace_path, serde_json::to_string(&half).unwrap()).unwrap();
    let out = run_in(
        dir.path(),
        &[
            "trace-check", "--family", "loc", "--n", "4", "--trace",
            trace_path.to_str().unwrap(),
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    let report = stdout_json(&out);
    assert_eq!(report["ok"], false);
}

#[test]
fn validate_accepts_generated_instances() {
    let dir = tempfile::tempdir().unwrap();
    let (game, init) = generate(dir.path(), "loc", 4);
    let out = run_in(dir.path(), &["validate", "--game", &game, "--init", &init]);
    assert!(out.status.success(), "validate failed: {out:?}");
    let report = stdout_json(&out);
    assert_eq!(report["valid"], true);
    assert_eq!(report["sink"], 0);
}

#[test]
fn validate_rejects_games_without_a_sink() {
    let dir = tempfile::tempdir().unwrap();
    let game = dir.path().join("nosink.txt");
    // Priorities 2 and 3: no priority-1 self-loop anywhere.
    std::fs::write(&game, "parity 1;\n0 2 0 1;\n1 3 1 0;\n").unwrap();
    let out = run_in(
        dir.path(),
        &["validate", "--game", game.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(3));
    let report = stdout_json(&out);
    assert_eq!(report["valid"], false);
    assert_eq!(report["sink_existence"], false);
}

#[test]
fn reduce_writes_each_target_class() {
    let dir = tempfile::tempdir().unwrap();
    let (game, _) = generate(dir.path(), "loc", 1);
    for (target, header) in [
        ("mpg", "meanpayoff 13;"),
        ("dpg", "discountedpayoff 13 "),
        ("ssg", "stochastic 42;"),
    ] {
        let out_path = path_str(dir.path(), &format!("out.{target}"));
        let out = run_in(
            dir.path(),
            &["reduce", "--game", &game, "--to", target, "--out", &out_path],
        );
        assert!(out.status.success(), "reduce {target} failed: {out:?}");
        let text = std::fs::read_to_string(&out_path).unwrap();
        assert!(
            text.starts_with(header),
            "{target} header mismatch: {}",
            text.lines().next().unwrap_or("")
        );
    }
    let out = run_in(
        dir.path(),
        &["reduce", "--game", &game, "--to", "xyz", "--out", "o"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_appends_rows_with_header_once() {
    let dir = tempfile::tempdir().unwrap();
    let csv = PathBuf::from(path_str(dir.path(), "bench.csv"));
    let out = run_in(
        dir.path(),
        &[
            "bench", "--family", "loc", "--policy", "local", "--n-min", "1", "--n-max", "3",
            "--csv", csv.to_str().unwrap(),
        ],
    );
    assert!(out.status.success(), "bench failed: {out:?}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "family,policy,n,nodes,edges,iterations,wall_ms");
    assert_eq!(lines.len(), 4);
    for (row, n) in lines[1..].iter().zip(1u32..) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[0], "loc");
        assert_eq!(cols[1], "local");
        assert_eq!(cols[2], n.to_string());
        let iterations: u64 = cols[5].parse().unwrap();
        assert!(iterations >= 1 << n, "n={n}: {iterations} switches");
    }
    let out = run_in(
        dir.path(),
        &[
            "bench", "--family", "loc", "--policy", "local", "--n-min", "4", "--n-max", "4",
            "--csv", csv.to_str().unwrap(),
        ],
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert_eq!(text.matches("family,policy").count(), 1);
}

#[test]
fn help_and_version_exit_cleanly() {
    for flag in ["--help", "--version"] {
        let out = bin().arg(flag).output().unwrap();
        assert!(out.status.success(), "{flag} failed");
    }
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn hung_up_stdout_pipe_is_not_an_error() {
    use std::process::Stdio;
    let dir = tempfile::tempdir().unwrap();
    let (game, init) = generate(dir.path(), "loc", 5);
    let trace = path_str(dir.path(), "g5.trace.json");
    let out = run_in(
        dir.path(),
        &[
            "solve", "--game", &game, "--init", &init, "--policy", "local", "--trace-out", &trace,
        ],
    );
    assert!(out.status.success());
    // Close the read end of the pipe before the child prints its large
    // report; writes must hit a broken pipe, not a panic.
    let mut child = bin()
        .args(["trace-check", "--family", "loc", "--n", "5", "--trace", &trace])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    drop(child.stdout.take());
    let status = child.wait().unwrap();
    assert!(status.success(), "broken pipe must not fail the check");
}
