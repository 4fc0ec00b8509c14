mod support;

use reqrefine::clarifier::AnswerSource;
use reqrefine::evaluator::evaluate;
use reqrefine::gateway::HeuristicBackend;
use reqrefine::orchestrator::{
    read_log, replay, EventBody, NoAnswers, Pipeline, RefinementSession, RunMode, SessionError,
    SessionOptions, SessionStatus,
};
use reqrefine::rewriter::pattern::{default_patterns, match_pattern};
use reqrefine::Characteristic;
use support::adversarial::{check_trial, run_trial};
use support::fixtures::{answers, root, R1, R2, R3};

fn refine(text: &str, answers_file: &str) -> RefinementSession {
    let mut session = RefinementSession::new(root(text), SessionOptions::default()).unwrap();
    session
        .advance(&Pipeline::heuristic(), &answers(answers_file))
        .unwrap();
    session
}

#[test]
fn r1_converges_to_a_conforming_full_score() {
    let session = refine(R1, "r1_answers.toml");
    assert_eq!(session.status(), SessionStatus::Converged);
    assert!(session.state().iterations_completed <= 2);
    let leaves = session.state().leaf_summaries();
    assert_eq!(leaves.len(), 1);
    let leaf = &leaves[0];
    assert_eq!(leaf.score.unwrap().to_string(), "100.0");
    assert!(leaf.text.starts_with("When the inventory manager"));
    assert!(leaf.text.contains("PDF and CSV"));
    let patterns = default_patterns();
    let f2 = match_pattern(&leaf.text, &patterns[1]).expect("F2 shape");
    assert_eq!(leaf.pattern_id.as_deref(), Some("F2"));
    assert!(f2.slot("condition clause").is_some_and(|s| !s.is_empty()));
}

#[test]
fn r2_split_answer_yields_two_singular_leaves() {
    let session = refine(R2, "r2_answers.toml");
    assert_eq!(session.status(), SessionStatus::Converged);
    let leaves = session.state().leaf_requirements();
    assert_eq!(leaves.len(), 2);
    let judge = HeuristicBackend::default();
    for leaf in leaves {
        let report = evaluate(leaf, &judge, false).unwrap();
        assert!(report.is_fulfilled(Characteristic::Singular), "{}", leaf.text());
    }
    let split = session
        .events()
        .iter()
        .filter(|e| matches!(e.body, EventBody::Split { .. }))
        .count();
    assert_eq!(split, 1);
    let indices: Vec<_> = session
        .state()
        .requirements
        .values()
        .filter_map(|r| r.split_index())
        .collect();
    assert_eq!(indices, [1, 2]);
}

#[test]
fn r3_without_answers_waits_for_people() {
    let mut session = RefinementSession::new(root(R3), SessionOptions::default()).unwrap();
    let status = session.advance(&Pipeline::heuristic(), &NoAnswers).unwrap();
    assert_eq!(status, SessionStatus::AwaitingAnswers);
    let pending = session.pending_questions();
    let targets: Vec<_> = pending.iter().map(|q| q.target).collect();
    assert_eq!(
        targets,
        [Characteristic::Unambiguous, Characteristic::Complete, Characteristic::Verifiable]
    );
    for q in &pending {
        let text = match q.target {
            Characteristic::Complete => "When the customer has not yet received the order.",
            _ => "Cancellation shall be confirmed within 10 seconds.",
        };
        session
            .attach_answer(&q.id, text, AnswerSource::Stakeholder, vec![])
            .unwrap();
    }
    let status = session.advance(&Pipeline::heuristic(), &NoAnswers).unwrap();
    assert_eq!(status, SessionStatus::Converged);
    let leaf = &session.state().leaf_summaries()[0];
    assert_eq!(
        leaf.text,
        "When the customer has not yet received the order, the customer shall be able to cancel an order. Cancellation shall be confirmed within 10 seconds."
    );
}

#[test]
fn exhausted_when_answers_never_help() {
    let book = reqrefine::orchestrator::AnswerBook::parse(
        "[[answers]]\ntarget = \"Verifiable\"\nanswer = \"No.\"\n\
         [[answers]]\ntarget = \"Complete\"\nanswer = \"No.\"\n\
         [[answers]]\ntarget = \"Unambiguous\"\nanswer = \"No.\"\n",
    )
    .unwrap();
    let mut session = RefinementSession::new(
        root("The operator shall acknowledge every alarm on the console."),
        SessionOptions {
            max_iterations: 2,
            ..SessionOptions::default()
        },
    )
    .unwrap();
    let status = session.advance(&Pipeline::heuristic(), &book).unwrap();
    assert_eq!(status, SessionStatus::Exhausted, "{:?}", session.state().failure);
    assert_eq!(session.state().iterations_completed, 2);
}

#[test]
fn unconformable_rewrite_fails_the_session() {
    let book = reqrefine::orchestrator::AnswerBook::parse(
        "[[answers]]\ntarget = \"Verifiable\"\nanswer = \"No.\"\n\
         [[answers]]\ntarget = \"Complete\"\nanswer = \"No.\"\n",
    )
    .unwrap();
    let mut session = RefinementSession::new(root("The operator shall respond."), SessionOptions::default()).unwrap();
    let status = session.advance(&Pipeline::heuristic(), &book).unwrap();
    assert_eq!(status, SessionStatus::Failed);
    assert!(session.state().failure.as_deref().unwrap().contains("does not follow F1"));
    let fatal = session
        .events()
        .iter()
        .filter(|e| matches!(e.body, EventBody::Error { fatal: true, .. }))
        .count();
    assert_eq!(fatal, 1);
}

#[test]
fn interactive_mode_ignores_the_provider() {
    let mut session = RefinementSession::new(
        root(R1),
        SessionOptions {
            mode: RunMode::Interactive,
            ..SessionOptions::default()
        },
    )
    .unwrap();
    let status = session
        .advance(&Pipeline::heuristic(), &answers("r1_answers.toml"))
        .unwrap();
    assert_eq!(status, SessionStatus::AwaitingAnswers);
    assert_eq!(session.pending_questions().len(), 3);
}

#[test]
fn write_once_answers() {
    let mut session = RefinementSession::new(
        root(R1),
        SessionOptions {
            mode: RunMode::Interactive,
            ..SessionOptions::default()
        },
    )
    .unwrap();
    session.advance(&Pipeline::heuristic(), &NoAnswers).unwrap();
    let q = session.pending_questions()[0].clone();
    assert!(matches!(
        session.attach_answer(&q.id, "  ", AnswerSource::Stakeholder, vec![]),
        Err(SessionError::Answer(_))
    ));
    assert!(matches!(
        session.attach_answer(&q.id, "x", AnswerSource::Rag, vec![]),
        Err(SessionError::Answer(_))
    ));
    session
        .attach_answer(&q.id, "PDF.", AnswerSource::Stakeholder, vec![])
        .unwrap();
    assert!(matches!(
        session.attach_answer(&q.id, "CSV.", AnswerSource::Stakeholder, vec![]),
        Err(SessionError::AlreadyAnswered(_))
    ));
    assert!(matches!(
        session.attach_answer("q42", "CSV.", AnswerSource::Stakeholder, vec![]),
        Err(SessionError::UnknownQuestion(_))
    ));
}

#[test]
fn resumed_log_continues_the_same_session() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r1.jsonl");
    let mut first = RefinementSession::new(
        root(R1),
        SessionOptions {
            mode: RunMode::Interactive,
            ..SessionOptions::default()
        },
    )
    .unwrap();
    first.log_to(&path).unwrap();
    first.advance(&Pipeline::heuristic(), &NoAnswers).unwrap();
    drop(first);

    let mut resumed = RefinementSession::resume(&path).unwrap();
    assert_eq!(resumed.status(), SessionStatus::AwaitingAnswers);
    let book = answers("r1_answers.toml");
    for q in resumed.pending_questions() {
        let requirement = resumed.state().requirements[&q.requirement_id].clone();
        let answer = reqrefine::orchestrator::AnswerProvider::answer(&book, &requirement, &q).unwrap();
        resumed
            .attach_answer(&q.id, &answer.text, answer.source, vec![])
            .unwrap();
    }
    assert_eq!(
        resumed.advance(&Pipeline::heuristic(), &NoAnswers).unwrap(),
        SessionStatus::Converged
    );
    let (header, events) = read_log(&path).unwrap();
    assert_eq!(replay(header, &events).unwrap(), *resumed.state());
}

#[test]
fn run_iteration_stops_after_one_round() {
    let mut session = RefinementSession::new(root(R2), SessionOptions::default()).unwrap();
    let status = session
        .run_iteration(&Pipeline::heuristic(), &answers("r2_answers.toml"))
        .unwrap();
    assert_eq!(status, SessionStatus::Running);
    assert_eq!(session.state().iterations_completed, 1);
    assert_eq!(session.state().leaves.len(), 2);
}

#[test]
fn randomized_sessions_keep_their_invariants() {
    for seed in 0..200 {
        let trial = run_trial(seed);
        if let Err(e) = check_trial(&trial) {
            panic!("seed {seed}: {e}");
        }
    }
}
