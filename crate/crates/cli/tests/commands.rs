mod common;

use common::support::fixtures::{R1, R2, R3};
use common::{cli, fixture_str};
use reqrefine::orchestrator::{read_log, SessionStatus};
use serde_json::Value;

const PERFECT: &str = "The system shall export the report in CSV format within 5 seconds.";

fn log_arg(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

#[test]
fn evaluate_exit_codes_follow_the_gate() {
    let r1 = cli(&["evaluate", R1], "");
    assert_eq!(r1.code, 2, "{}", r1.err);
    let unambiguous = r1.out.lines().find(|l| l.starts_with("| Unambiguous |")).unwrap();
    assert!(unambiguous.ends_with("| No |"), "{unambiguous}");
    assert!(r1.out.contains("score: 62.5"));

    let perfect = cli(&["evaluate", PERFECT], "");
    assert_eq!(perfect.code, 0);
    assert!(perfect.out.contains("gate: passed"));
}

#[test]
fn evaluate_json_is_machine_readable() {
    let out = cli(&["--json", "evaluate", R1], "");
    let v: Value = serde_json::from_str(&out.out).unwrap();
    assert_eq!(v["passed"], false);
    assert_eq!(v["score"]["value"], 62.5);
}

#[test]
fn errors_and_usage_have_their_own_codes() {
    let missing = cli(&["--config", "/nonexistent/reqrefine.toml", "evaluate", R1], "");
    assert_eq!(missing.code, 5);
    assert!(missing.err.starts_with("error: config file"), "{}", missing.err);
    assert_eq!(cli(&["frobnicate"], "").code, 64);
    assert_eq!(cli(&["refine"], "").code, 64);
    assert_eq!(cli(&["--backend", "judge=heuristic", "evaluate", R1], "").code, 5);
    assert_eq!(cli(&["--backend", "evaluator", "evaluate", R1], "").code, 5);
    assert_eq!(cli(&["--max-iter", "0", "evaluate", R1], "").code, 5);
    let help = cli(&["--help"], "");
    assert_eq!(help.code, 0);
    assert!(help.out.contains("refine"));
}

#[test]
fn refine_r1_prints_one_f2_leaf() {
    let dir = tempfile::tempdir().unwrap();
    let log = log_arg(&dir, "r1.jsonl");
    let out = cli(&["refine", R1, "--answers", &fixture_str("r1_answers.toml"), "--log", &log], "");
    assert_eq!(out.code, 0, "{}{}", out.out, out.err);
    let leaves: Vec<&str> = out.out.lines().filter(|l| l.starts_with('r')).collect();
    assert_eq!(leaves.len(), 1);
    assert!(leaves[0].starts_with("r2 [F2] 100.0  When the inventory manager"), "{}", leaves[0]);
    assert!(out.out.ends_with(&format!("session log: {log}\n")));
    let (_, events) = read_log(std::path::Path::new(&log)).unwrap();
    assert_eq!(events.last().unwrap().body.kind(), "gated");
}

#[test]
fn refine_r2_prints_two_leaves() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(
        &["refine", R2, "--answers", &fixture_str("r2_answers.toml"), "--log", &log_arg(&dir, "r2.jsonl")],
        "",
    );
    assert_eq!(out.code, 0, "{}", out.out);
    let leaves: Vec<&str> = out.out.lines().filter(|l| l.contains(" [F")).collect();
    assert_eq!(leaves.len(), 2, "{}", out.out);
}

#[test]
fn perfect_requirement_is_printed_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["refine", PERFECT, "--log", &log_arg(&dir, "p.jsonl")], "");
    assert_eq!(out.code, 0);
    assert!(out.out.contains(&format!("r1 [-] 100.0  {PERFECT}")), "{}", out.out);
}

#[test]
fn unanswered_questions_are_asked_on_the_terminal() {
    let dir = tempfile::tempdir().unwrap();
    let log = log_arg(&dir, "r3.jsonl");
    // the first question is skipped, then input ends
    let partial = cli(&["refine", R3, "--log", &log], "\nWhen the customer has not yet received the order.\n");
    assert_eq!(partial.code, 3);
    assert!(partial.err.contains("[q1]"));
    assert!(partial.out.contains("status: awaiting_answers"));
    assert!(partial.out.contains("unanswered: q1, q3"), "{}", partial.out);

    let again = cli(
        &["refine", "--resume", &log],
        "Cancellation shall be confirmed within 10 seconds.\nCancellation shall be confirmed within 10 seconds.\n",
    );
    assert_eq!(again.code, 0, "{}{}", again.out, again.err);
    assert!(again.out.contains(
        "When the customer has not yet received the order, the customer shall be able to cancel an order."
    ));
    let (header, events) = read_log(std::path::Path::new(&log)).unwrap();
    let state = reqrefine::orchestrator::replay(header, &events).unwrap();
    assert_eq!(state.status, SessionStatus::Converged);
}

#[test]
fn exhausted_sessions_exit_3_with_the_best_so_far() {
    let dir = tempfile::tempdir().unwrap();
    let answers = dir.path().join("no.toml");
    std::fs::write(
        &answers,
        "[[answers]]\ntarget = \"Verifiable\"\nanswer = \"No.\"\n\
         [[answers]]\ntarget = \"Complete\"\nanswer = \"No.\"\n\
         [[answers]]\ntarget = \"Unambiguous\"\nanswer = \"No.\"\n",
    )
    .unwrap();
    let out = cli(
        &[
            "--max-iter",
            "2",
            "refine",
            "The operator shall acknowledge every alarm on the console.",
            "--answers",
            answers.to_str().unwrap(),
            "--log",
            &log_arg(&dir, "x.jsonl"),
        ],
        "",
    );
    assert_eq!(out.code, 3, "{}", out.out);
    assert!(out.out.starts_with("status: exhausted after 2 iteration(s)"));
    assert!(out.out.lines().any(|l| l.contains("The operator shall")));
}

#[test]
fn failed_sessions_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let answers = dir.path().join("no.toml");
    std::fs::write(
        &answers,
        "[[answers]]\ntarget = \"Verifiable\"\nanswer = \"No.\"\n\
         [[answers]]\ntarget = \"Complete\"\nanswer = \"No.\"\n",
    )
    .unwrap();
    let out = cli(
        &["refine", "The operator shall respond.", "--answers", answers.to_str().unwrap(), "--log", &log_arg(&dir, "f.jsonl")],
        "",
    );
    assert_eq!(out.code, 4, "{}", out.out);
    assert!(out.out.contains("failure:"));
}

#[test]
fn refine_json_lists_leaves_and_questions() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(
        &["--json", "refine", R1, "--answers", &fixture_str("r1_answers.toml"), "--log", &log_arg(&dir, "j.jsonl")],
        "",
    );
    let v: Value = serde_json::from_str(&out.out).unwrap();
    assert_eq!(v["session"]["status"], "converged");
    assert_eq!(v["leaves"][0]["pattern_id"], "F2");
    assert_eq!(v["leaves"][0]["parent"]["id"], "r1");
    assert_eq!(v["questions"].as_array().unwrap().len(), 3);
}

#[test]
fn ingest_then_ask_offers_retrieved_answers() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("orders.txt");
    std::fs::write(
        &doc,
        "Order cancellation policy. This requirement holds under one condition: the order has not been delivered. \
         The measurable criterion is an e-mail confirmation within 10 seconds.",
    )
    .unwrap();
    let config = dir.path().join("project.toml");
    std::fs::write(&config, "[rag]\nchunk_size = 200\noverlap = 40\nindex_path = \"docs.idx\"\n").unwrap();
    let config = config.to_str().unwrap();

    let ask_without_index = cli(&["--config", config, "ask", R3], "");
    assert_eq!(ask_without_index.code, 0);
    assert!(!ask_without_index.out.contains("suggested"));

    let ingest = cli(&["--config", config, "ingest", doc.to_str().unwrap()], "");
    assert_eq!(ingest.code, 0, "{}", ingest.err);
    assert!(ingest.out.starts_with("indexed 1 chunk(s) from 1 file(s)"), "{}", ingest.out);
    assert!(dir.path().join("docs.idx").exists());

    let ask = cli(&["--config", config, "ask", R3], "");
    assert_eq!(ask.code, 0);
    assert!(ask.out.contains("q1 [Unambiguous]"));
    assert!(
        ask.out.contains("    suggested: This requirement holds under one condition: the order has not been delivered."),
        "{}",
        ask.out
    );

    let missing = cli(&["--config", config, "ingest", "/nonexistent.txt"], "");
    assert_eq!(missing.code, 5);
    let no_rag = cli(&["ingest", doc.to_str().unwrap()], "");
    assert_eq!(no_rag.code, 5);
}

#[test]
fn ask_on_a_perfect_requirement_has_nothing_to_ask() {
    let out = cli(&["ask", PERFECT], "");
    assert_eq!(out.code, 0);
    assert!(out.out.starts_with("nothing to ask"));
}
