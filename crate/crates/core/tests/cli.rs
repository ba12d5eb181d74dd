//! End-to-end checks of the command-line interface: exit codes, output
//! shapes and determinism.

use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn cqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqc"))
        .args(args)
        .env("CQC_COLOR", "0")
        .stdin(Stdio::null())
        .output()
        .expect("binary runs")
}

fn cqc_stdin(args: &[&str], input: &str) -> Output {
    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_cqc"))
        .args(args)
        .env("CQC_COLOR", "0")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().expect("binary finishes")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn check_exit_codes_encode_the_verdict() {
    let school = fixture("school.cqc");
    let complete = cqc(&["check", "-q", "q_ppb", "-f", school.to_str().unwrap()]);
    assert_eq!(complete.status.code(), Some(0));
    assert_eq!(stdout(&complete).trim(), "complete");

    let incomplete = cqc(&["check", "-q", "q_pbl", "-f", school.to_str().unwrap()]);
    assert_eq!(incomplete.status.code(), Some(1));
    assert_eq!(stdout(&incomplete).trim(), "incomplete");
}

#[test]
fn documents_can_come_from_stdin() {
    let text = std::fs::read_to_string(fixture("school.cqc")).unwrap();
    let output = cqc_stdin(&["check", "-q", "q_pbl_spec", "--stdin"], &text);
    assert_eq!(output.status.code(), Some(0));
}

#[test]
fn parse_errors_exit_with_two_and_report_positions() {
    let output = cqc_stdin(&["check", "-q", "q"], "q(N) :- learns(N,L)");
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("error:"), "stderr was: {}", err);
    assert!(err.contains("1:"), "no position in: {}", err);
}

#[test]
fn unknown_queries_exit_with_two() {
    let school = fixture("school.cqc");
    let output = cqc(&["check", "-q", "nope", "-f", school.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("unknown query"));
}

#[test]
fn usage_errors_exit_with_two() {
    let output = cqc(&["frobnicate"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn generalize_prints_the_query_or_none() {
    let school = fixture("school.cqc");
    let found = cqc(&["generalize", "-q", "q_pbl", "-f", school.to_str().unwrap()]);
    assert_eq!(found.status.code(), Some(0));
    assert!(stdout(&found).contains("q_pbl(N) :- pupil(N,C,S), school(S,primary,merano)."));

    let conn = fixture("conn.cqc");
    let none = cqc(&["generalize", "-q", "q_conn", "-f", conn.to_str().unwrap()]);
    assert_eq!(none.status.code(), Some(1));
    assert_eq!(stdout(&none).trim(), "none");
}

#[test]
fn generalize_trace_lists_removals() {
    let school = fixture("school.cqc");
    let output = cqc(&[
        "generalize",
        "-q",
        "q_pbl",
        "--trace",
        "-f",
        school.to_str().unwrap(),
    ]);
    let text = stdout(&output);
    assert!(text.contains("step 1: removed [learns(N,L)]"), "got: {}", text);
}

#[test]
fn specialize_connection_query() {
    let conn = fixture("conn.cqc");
    let output = cqc(&[
        "specialize",
        "-q",
        "q_conn",
        "--k",
        "0",
        "-f",
        conn.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(stdout(&output).trim(), "q_conn(X) :- conn(X,X).");
}

#[test]
fn specialize_budget_exhaustion_exits_with_three() {
    let learns = fixture("learns.cqc");
    let output = cqc(&[
        "specialize",
        "-q",
        "q_l",
        "--k",
        "4",
        "--max-extensions",
        "2",
        "-f",
        learns.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));
    assert!(stdout(&output).contains("budget exhausted"));
}

#[test]
fn contains_compares_two_named_queries() {
    let school = fixture("school.cqc");
    let yes = cqc(&[
        "contains", "-q", "q_pbl", "-Q", "q_ppb", "-f", school.to_str().unwrap(),
    ]);
    assert_eq!(yes.status.code(), Some(0));
    assert_eq!(stdout(&yes).trim(), "yes");

    let no = cqc(&[
        "contains", "-q", "q_ppb", "-Q", "q_pbl", "-f", school.to_str().unwrap(),
    ]);
    assert_eq!(no.status.code(), Some(1));
    assert_eq!(stdout(&no).trim(), "no");
}

#[test]
fn minimize_drops_redundant_atoms() {
    let doc = fixture("counterexample.cqc");
    let output = cqc(&["minimize", "-q", "q_red", "-f", doc.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(stdout(&output).trim(), "q_red(X) :- r(X,a).");
}

#[test]
fn eval_answers_over_data_facts() {
    let school = fixture("school.cqc");
    let data = fixture("school_facts.cqc");
    let output = cqc(&[
        "eval",
        "-q",
        "q_ppb",
        "--data",
        data.to_str().unwrap(),
        "-f",
        school.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(stdout(&output).trim(), "(john)");
}

#[test]
fn satisfies_reports_per_statement_verdicts() {
    let school = fixture("school.cqc");
    let ideal = fixture("school_ideal.cqc");
    let available = fixture("school_available.cqc");
    let output = cqc(&[
        "satisfies",
        "--ideal",
        ideal.to_str().unwrap(),
        "--available",
        available.to_str().unwrap(),
        "-f",
        school.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let text = stdout(&output);
    assert!(text.contains("c1 complete school(S,primary,D). : satisfied"));
    assert!(text.contains("c2 complete pupil(N,C,S) ; school(S,T,merano). : violated"));
}

#[test]
fn bound_reports_and_refuses() {
    let school = fixture("school.cqc");
    let output = cqc(&["bound", "-q", "q_pbl", "-f", school.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.contains("acyclic: yes"));
    assert!(text.contains("bound: 1197"));
    assert!(text.contains("suggested k: 1194"));

    let conn = fixture("conn.cqc");
    let refused = cqc(&["bound", "-q", "q_conn", "-f", conn.to_str().unwrap()]);
    assert_eq!(refused.status.code(), Some(1));
    assert!(stdout(&refused).contains("acyclic: no"));
}

#[test]
fn json_output_carries_the_documented_fields() {
    let school = fixture("school.cqc");
    let output = cqc(&[
        "specialize",
        "-q",
        "q_pbl",
        "--k",
        "0",
        "--json",
        "-f",
        school.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(value["command"], "specialize");
    assert_eq!(value["budget_exhausted"], false);
    assert!(value["elapsed_ms"].is_u64());
    let queries = value["queries"].as_array().unwrap();
    assert_eq!(queries.len(), 1);
    assert!(queries[0]["text"].as_str().unwrap().contains("learns(N,english)"));
    assert!(queries[0]["body"].as_array().unwrap().len() == 3);
    assert_eq!(queries[0]["head"][0]["kind"], "variable");
}

#[test]
fn unsafe_queries_need_the_flag() {
    let doc = "q(N) :- true.\n";
    let rejected = cqc_stdin(&["check", "-q", "q"], doc);
    assert_eq!(rejected.status.code(), Some(2));
    // With the flag the document parses; the completeness check still
    // refuses the unsafe query.
    let allowed = cqc_stdin(&["check", "-q", "q", "--allow-unsafe"], doc);
    assert_eq!(allowed.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&allowed.stderr).contains("unsafe"));
}

#[test]
fn identical_inputs_give_byte_identical_outputs() {
    let learns = fixture("learns.cqc");
    let args = [
        "specialize",
        "-q",
        "q_l",
        "--k",
        "3",
        "--explain",
        "-f",
        learns.to_str().unwrap(),
    ];
    let first = cqc(&args);
    let second = cqc(&args);
    assert_eq!(first.status.code(), second.status.code());
    assert_eq!(stdout(&first), stdout(&second));
    assert!(!stdout(&first).trim().is_empty());
}

#[test]
fn verify_runs_the_oracle_battery() {
    let output = cqc(&["verify"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.lines().count() >= 5);
    assert!(text.lines().all(|line| line.starts_with("ok")), "got: {}", text);
}
