#![allow(dead_code)]

#[path = "../../../core/tests/support/mod.rs"]
pub mod support;

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use reqrefine::clarifier::ClarifyingQuestion;
use reqrefine::orchestrator::{read_log, AnswerBook, AnswerProvider, SessionEvent};
use reqrefine::{Requirement, RequirementId};
use reqrefine_cli::server::{router, AppState};
use reqrefine_cli::ProjectConfig;

pub use support::fixtures::fixture;

pub struct Output {
    pub code: i32,
    pub out: String,
    pub err: String,
}

/// Runs the command line in-process with `stdin` as terminal input.
pub fn cli(args: &[&str], stdin: &str) -> Output {
    let mut input = stdin.as_bytes();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("reqrefine").chain(args.iter().copied());
    let code = reqrefine_cli::run(argv, &mut input, &mut out, &mut err);
    Output {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

pub fn fixture_str(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

pub fn app(config: ProjectConfig) -> Router {
    router(Arc::new(AppState::new(config).unwrap()))
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let request = Request::builder().method(method).uri(uri);
    let request = match body {
        Some(b) => request
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => request.body(Body::empty()),
    }
    .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = axum::body::to_bytes(response.into_body(), usize::MAX).await.unwrap();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

/// Events as JSON without their timestamps.
pub fn strip(events: &[SessionEvent]) -> Vec<Value> {
    events
        .iter()
        .map(|e| {
            let mut v = serde_json::to_value(e).unwrap();
            v.as_object_mut().unwrap().remove("timestamp");
            v
        })
        .collect()
}

/// Refines `text` through the command line and returns the logged events.
pub fn cli_refine_events(text: &str, answers: &str, dir: &Path) -> (Output, Vec<SessionEvent>) {
    let log = dir.join("cli.jsonl");
    let out = cli(
        &["refine", text, "--answers", &fixture_str(answers), "--log", log.to_str().unwrap()],
        "",
    );
    let (_, events) = read_log(&log).unwrap();
    (out, events)
}

/// Drives a session over HTTP, answering every pending question from
/// `book`, until it stops. Returns the session id and its events.
pub async fn api_refine(app: &Router, text: &str, book: &AnswerBook) -> (String, Vec<SessionEvent>) {
    let (status, created) = call(app, "POST", "/sessions", Some(json!({ "requirement": text }))).await;
    assert_eq!(status, StatusCode::CREATED, "{created}");
    let id = created["id"].as_str().unwrap().to_string();
    loop {
        let (_, summary) = call(app, "GET", &format!("/sessions/{id}"), None).await;
        if summary["status"] != "awaiting_answers" {
            break;
        }
        let (_, pending) = call(app, "GET", &format!("/sessions/{id}/questions?status=pending"), None).await;
        let (_, leaves) = call(app, "GET", &format!("/sessions/{id}/leaves"), None).await;
        let mut answered = 0;
        for q in pending.as_array().unwrap() {
            let leaf = leaves
                .as_array()
                .unwrap()
                .iter()
                .find(|l| l["id"] == q["requirement_id"])
                .unwrap();
            let requirement = Requirement::authored(
                RequirementId::new(leaf["id"].as_str().unwrap()),
                leaf["text"].as_str().unwrap(),
            )
            .unwrap();
            let question = ClarifyingQuestion {
                id: q["exchange_id"].as_str().unwrap().into(),
                requirement_id: RequirementId::new(q["requirement_id"].as_str().unwrap()),
                target: serde_json::from_value(q["target"].clone()).unwrap(),
                text: q["text"].as_str().unwrap().into(),
            };
            let Some(answer) = book.answer(&requirement, &question) else { continue };
            let body = json!({ "exchange_id": question.id, "answer": answer.text, "source": answer.source });
            let (status, reply) = call(app, "POST", &format!("/sessions/{id}/answers"), Some(body)).await;
            assert_eq!(status, StatusCode::OK, "{reply}");
            answered += 1;
        }
        if answered == 0 {
            break;
        }
        let (status, reply) = call(app, "POST", &format!("/sessions/{id}/advance"), None).await;
        assert_eq!(status, StatusCode::OK, "{reply}");
    }
    let (_, page) = call(app, "GET", &format!("/sessions/{id}/events?limit=1000"), None).await;
    let events = serde_json::from_value(page["events"].clone()).unwrap();
    (id, events)
}
