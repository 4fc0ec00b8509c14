//! HTTP API over refinement sessions.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use reqrefine::clarifier::AnswerSource;
use reqrefine::orchestrator::{NoAnswers, Pipeline, RefinementSession, RunMode, SessionError, SessionEvent};
use reqrefine::{Requirement, RequirementId};

use crate::commands::{CommandError, ROOT_ID};
use crate::config::ProjectConfig;
use crate::exit::Exit;
use crate::views::{self, QuestionStatus, SessionSummary};
use crate::Io;

/// Largest page `GET /sessions/{id}/events` returns.
pub const MAX_PAGE: usize = 1000;

type Shared = Arc<Mutex<RefinementSession>>;

pub struct AppState {
    pipeline: Pipeline,
    config: ProjectConfig,
    sessions: Mutex<BTreeMap<String, Shared>>,
}

impl AppState {
    /// Builds the service state, reopening every log under `sessions_dir`.
    pub fn new(config: ProjectConfig) -> Result<Self, CommandError> {
        let pipeline = config.pipeline()?;
        let mut sessions = BTreeMap::new();
        if let Some(dir) = &config.sessions_dir {
            std::fs::create_dir_all(dir)?;
            for entry in std::fs::read_dir(dir)? {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e == "jsonl") {
                    match RefinementSession::resume(&path) {
                        Ok(session) => {
                            sessions.insert(session.id().to_string(), Arc::new(Mutex::new(session)));
                        }
                        Err(e) => tracing::warn!(log = %path.display(), error = %e, "skipping session log"),
                    }
                }
            }
        }
        Ok(Self {
            pipeline,
            config,
            sessions: Mutex::new(sessions),
        })
    }

    fn session(&self, id: &str) -> Result<Shared, ApiError> {
        self.sessions
            .lock()
            .expect("session table")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session {id}")))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::UnknownQuestion(_) => StatusCode::NOT_FOUND,
            SessionError::AlreadyAnswered(_) | SessionError::NotPending(_) => StatusCode::CONFLICT,
            SessionError::Answer(_) | SessionError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/questions", get(get_questions))
        .route("/sessions/{id}/answers", post(post_answer))
        .route("/sessions/{id}/advance", post(advance))
        .route("/sessions/{id}/leaves", get(get_leaves))
        .route("/sessions/{id}/events", get(get_events))
        .with_state(state)
}

async fn health(State(app): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let sessions = app.sessions.lock().expect("session table").len();
    Json(json!({ "status": "ok", "sessions": sessions }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub requirement: String,
    #[serde(default)]
    pub mode: Option<RunMode>,
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    Json(body): Json<CreateSession>,
) -> ApiResult<(StatusCode, Json<SessionSummary>)> {
    let summary = blocking(move || {
        let root = Requirement::authored(RequirementId::new(ROOT_ID), body.requirement)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
        let options = app.config.session_options(body.mode.unwrap_or(RunMode::Interactive));
        let mut session = RefinementSession::new(root, options)?;
        if let Some(dir) = &app.config.sessions_dir {
            session.log_to(&dir.join(format!("{}.jsonl", session.id())))?;
        }
        session.advance(&app.pipeline, &NoAnswers)?;
        let summary = SessionSummary::of(&session);
        app.sessions
            .lock()
            .expect("session table")
            .insert(summary.id.clone(), Arc::new(Mutex::new(session)));
        Ok(summary)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn list_sessions(State(app): State<Arc<AppState>>) -> Json<Vec<SessionSummary>> {
    let sessions: Vec<Shared> = app.sessions.lock().expect("session table").values().cloned().collect();
    Json(
        sessions
            .iter()
            .map(|s| SessionSummary::of(&s.lock().expect("session")))
            .collect(),
    )
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SessionSummary>> {
    let session = app.session(&id)?;
    let summary = SessionSummary::of(&session.lock().expect("session"));
    Ok(Json(summary))
}

#[derive(Debug, Default, Deserialize)]
struct QuestionFilter {
    #[serde(default)]
    status: Option<String>,
}

async fn get_questions(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(filter): Query<QuestionFilter>,
) -> ApiResult<Json<Vec<views::QuestionView>>> {
    let wanted = match filter.status.as_deref().unwrap_or("pending") {
        "all" => None,
        "pending" => Some(QuestionStatus::Pending),
        "answered" => Some(QuestionStatus::Answered),
        "unanswered" => Some(QuestionStatus::Unanswered),
        other => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                format!("status must be pending, answered, unanswered or all, not `{other}`"),
            ))
        }
    };
    let session = app.session(&id)?;
    let questions = views::questions(session.lock().expect("session").state());
    Ok(Json(
        questions
            .into_iter()
            .filter(|q| wanted.is_none_or(|w| q.status == w))
            .collect(),
    ))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostAnswer {
    pub exchange_id: String,
    pub answer: String,
    #[serde(default)]
    pub source: Option<AnswerSource>,
}

async fn post_answer(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(body): Json<PostAnswer>,
) -> ApiResult<Json<views::QuestionView>> {
    let session = app.session(&id)?;
    blocking(move || {
        let mut session = session.lock().expect("session");
        let source = body.source.unwrap_or(AnswerSource::Stakeholder);
        session.attach_answer(&body.exchange_id, &body.answer, source, vec![])?;
        views::questions(session.state())
            .into_iter()
            .find(|q| q.exchange_id == body.exchange_id)
            .ok_or_else(|| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "answered question vanished"))
    })
    .await
    .map(Json)
}

async fn advance(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SessionSummary>> {
    let session = app.session(&id)?;
    blocking(move || {
        let mut session = session.lock().expect("session");
        let pending = session.pending_questions();
        if !pending.is_empty() {
            let ids: Vec<_> = pending.iter().map(|q| q.id.as_str()).collect();
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                format!("questions still pending: {}", ids.join(", ")),
            ));
        }
        session.advance(&app.pipeline, &NoAnswers)?;
        Ok(SessionSummary::of(&session))
    })
    .await
    .map(Json)
}

async fn get_leaves(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Vec<views::LeafView>>> {
    let session = app.session(&id)?;
    let leaves = views::leaves(session.lock().expect("session").state());
    Ok(Json(leaves))
}

#[derive(Debug, Deserialize)]
struct Page {
    #[serde(default)]
    offset: usize,
    #[serde(default = "default_limit")]
    limit: usize,
}

fn default_limit() -> usize {
    100
}

#[derive(Debug, serde::Serialize)]
struct EventPage {
    total: usize,
    offset: usize,
    limit: usize,
    events: Vec<SessionEvent>,
}

async fn get_events(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(page): Query<Page>,
) -> ApiResult<Json<serde_json::Value>> {
    if page.limit == 0 || page.limit > MAX_PAGE {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            format!("limit must be between 1 and {MAX_PAGE}"),
        ));
    }
    let session = app.session(&id)?;
    let session = session.lock().expect("session");
    let events = session.events();
    let body = EventPage {
        total: events.len(),
        offset: page.offset,
        limit: page.limit,
        events: events.iter().skip(page.offset).take(page.limit).cloned().collect(),
    };
    Ok(Json(serde_json::to_value(body).expect("serializable page")))
}

/// Binds `listen` and serves until interrupted.
pub fn serve_blocking(config: &ProjectConfig, listen: &str, io: &mut Io<'_>) -> Result<Exit, CommandError> {
    let state = Arc::new(AppState::new(config.clone())?);
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(listen).await?;
        writeln!(io.err, "listening on http://{}", listener.local_addr()?)?;
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok::<_, CommandError>(())
    })?;
    Ok(Exit::Ok)
}

