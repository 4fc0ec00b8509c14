//! The refinement loop.
//!
//! A [`RefinementSession`] is an append-only list of [`SessionEvent`]s;
//! its [`SessionState`] is nothing but the fold of those events, so a log
//! file replays to exactly the state of the live run. Each iteration opens
//! a round over the failing leaf requirements: questions are generated and
//! answered, every leaf is rewritten, and the rewrites are evaluated and
//! accepted only if they score no worse than their parent.

mod answers;
mod events;
mod log;
mod state;

use std::collections::BTreeSet;
use std::fmt::Display;
use std::path::Path;
use std::sync::Arc;

use chrono::Utc;
use serde::Serialize;
use thiserror::Error;

pub use answers::{AnswerBook, AnswerProvider, AnswerRule, NoAnswers, ProvidedAnswer};
pub use events::{
    EventBody, RagSuggestion, RunMode, SessionEvent, SessionHeader, SessionStatus, Stage,
};
pub use log::{read_log, EventLog, LOG_FORMAT, LOG_VERSION};
pub use state::{accept_if_improved, replay, RewriteRecord, Round, SessionState};

use crate::characteristic::Characteristic;
use crate::clarifier::{generate_questions, select_covering, AnswerSource, ClarifyingQuestion};
use crate::evaluator::{evaluate, gate, GatePolicy};
use crate::gateway::{Backend, HeuristicBackend};
use crate::metric::{compute_quality, unfulfilled, QualityScore};
use crate::ragstore::{answer_question, ChunkId, RagStore};
use crate::requirement::{Requirement, RequirementId};
use crate::rewriter::pattern::{default_patterns, RequirementPattern};
use crate::rewriter::rewrite;

pub const DEFAULT_MAX_ITERATIONS: u32 = 3;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("session log is corrupt: {0}")]
    Corrupt(String),
    #[error("no question `{0}` in this session")]
    UnknownQuestion(String),
    #[error("question `{0}` is already answered")]
    AlreadyAnswered(String),
    #[error("question `{0}` is not awaiting an answer")]
    NotPending(String),
    #[error("answer rejected: {0}")]
    Answer(String),
    #[error("reports were scored over different characteristics")]
    AssessedMismatch,
    #[error("{0}")]
    Invalid(String),
    #[error("session made no progress")]
    Stalled,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The backends and resources a session runs against.
#[derive(Clone)]
pub struct Pipeline {
    pub evaluator: Arc<dyn Backend>,
    pub clarifier: Arc<dyn Backend>,
    pub answerer: Arc<dyn Backend>,
    pub rewriter: Arc<dyn Backend>,
    pub patterns: Vec<RequirementPattern>,
    pub rag: Option<Arc<RagStore>>,
    pub rag_k: usize,
    /// Extra attempts per stage before the session fails.
    pub stage_retries: u32,
}

impl Pipeline {
    /// One backend for every role.
    pub fn uniform(backend: Arc<dyn Backend>, patterns: Vec<RequirementPattern>) -> Self {
        Self {
            evaluator: backend.clone(),
            clarifier: backend.clone(),
            answerer: backend.clone(),
            rewriter: backend,
            patterns,
            rag: None,
            rag_k: 4,
            stage_retries: 1,
        }
    }

    /// The offline backend with bundled lexicon and patterns.
    pub fn heuristic() -> Self {
        Self::uniform(Arc::new(HeuristicBackend::default()), default_patterns())
    }

    pub fn with_rag(mut self, store: Arc<RagStore>, k: usize) -> Self {
        self.rag = Some(store);
        self.rag_k = k;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOptions {
    pub mode: RunMode,
    pub policy: GatePolicy,
    pub max_iterations: u32,
    pub standard_configured: bool,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            mode: RunMode::Automatic,
            policy: GatePolicy::all_assessed(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            standard_configured: false,
        }
    }
}

/// A current leaf with its latest evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafSummary {
    pub id: RequirementId,
    pub text: String,
    pub pattern_id: Option<String>,
    pub score: Option<QualityScore>,
    pub passed: Option<bool>,
}

impl SessionState {
    pub fn leaf_summaries(&self) -> Vec<LeafSummary> {
        self.leaves
            .iter()
            .map(|id| LeafSummary {
                id: id.clone(),
                text: self.requirements[id].text().to_string(),
                pattern_id: self.rewrites.iter().find_map(|r| {
                    r.children
                        .iter()
                        .position(|c| c == id)
                        .map(|i| r.pattern_ids[i].clone())
                }),
                score: self.scores.get(id).copied(),
                passed: self.gates.get(id).copied(),
            })
            .collect()
    }
}

/// One requirement's refinement, driven by a single writer.
#[derive(Debug)]
pub struct RefinementSession {
    state: SessionState,
    events: Vec<SessionEvent>,
    log: Option<EventLog>,
}

impl RefinementSession {
    /// A fresh session for `root` with a random id.
    pub fn new(root: Requirement, options: SessionOptions) -> Result<Self, SessionError> {
        if options.max_iterations == 0 {
            return Err(SessionError::Invalid("max_iterations must be at least 1".into()));
        }
        Ok(Self::from_header(SessionHeader {
            id: uuid::Uuid::new_v4().to_string(),
            created_at: Utc::now(),
            root,
            mode: options.mode,
            policy: options.policy,
            max_iterations: options.max_iterations,
            standard_configured: options.standard_configured,
        }))
    }

    pub fn from_header(header: SessionHeader) -> Self {
        Self {
            state: SessionState::new(header),
            events: Vec::new(),
            log: None,
        }
    }

    /// Rebuilds a session from recorded events.
    pub fn from_events(header: SessionHeader, events: Vec<SessionEvent>) -> Result<Self, SessionError> {
        let state = replay(header, &events)?;
        Ok(Self {
            state,
            events,
            log: None,
        })
    }

    /// Reopens a session from its log file; new events are appended to it.
    pub fn resume(path: &Path) -> Result<Self, SessionError> {
        let (log, header, events) = EventLog::open(path)?;
        let mut session = Self::from_events(header, events)?;
        session.log = Some(log);
        Ok(session)
    }

    /// Starts writing the session to a new log file, including the events
    /// recorded so far.
    pub fn log_to(&mut self, path: &Path) -> Result<(), SessionError> {
        let mut log = EventLog::create(path, self.header())?;
        for event in &self.events {
            log.append(event)?;
        }
        self.log = Some(log);
        Ok(())
    }

    pub fn log_path(&self) -> Option<&Path> {
        self.log.as_ref().map(EventLog::path)
    }

    pub fn id(&self) -> &str {
        &self.state.header.id
    }

    pub fn header(&self) -> &SessionHeader {
        &self.state.header
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn status(&self) -> SessionStatus {
        self.state.status
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn pending_questions(&self) -> Vec<ClarifyingQuestion> {
        self.state.pending_questions().into_iter().cloned().collect()
    }

    fn push(&mut self, iteration: u32, body: EventBody) -> Result<(), SessionError> {
        let event = SessionEvent {
            seq: self.state.last_seq + 1,
            timestamp: Utc::now(),
            iteration,
            body,
        };
        self.state.apply(&event)?;
        if let Some(log) = &mut self.log {
            log.append(&event)?;
        }
        self.events.push(event);
        Ok(())
    }

    /// Records an answer to a pending question.
    pub fn attach_answer(
        &mut self,
        question_id: &str,
        answer: &str,
        source: AnswerSource,
        provenance: Vec<ChunkId>,
    ) -> Result<(), SessionError> {
        let exchange = self
            .state
            .exchanges
            .get(question_id)
            .ok_or_else(|| SessionError::UnknownQuestion(question_id.to_string()))?;
        if exchange.is_answered() {
            return Err(SessionError::AlreadyAnswered(question_id.to_string()));
        }
        let Some(round) = &self.state.round else {
            return Err(SessionError::NotPending(question_id.to_string()));
        };
        let iteration = round.iteration;
        let answered = exchange
            .attach_answer(answer, source, provenance)
            .map_err(|e| SessionError::Answer(e.to_string()))?;
        self.push(iteration, EventBody::AnswerAttached { exchange: answered })
    }

    /// Runs until the session converges, is exhausted, fails, or needs
    /// answers.
    pub fn advance(
        &mut self,
        pipeline: &Pipeline,
        answers: &dyn AnswerProvider,
    ) -> Result<SessionStatus, SessionError> {
        while self.status() == SessionStatus::Running {
            self.step(pipeline, answers)?;
        }
        Ok(self.status())
    }

    /// Runs until the current iteration completes or the session stops.
    pub fn run_iteration(
        &mut self,
        pipeline: &Pipeline,
        answers: &dyn AnswerProvider,
    ) -> Result<SessionStatus, SessionError> {
        let start = self.state.iterations_completed;
        while self.status() == SessionStatus::Running && self.state.iterations_completed == start {
            self.step(pipeline, answers)?;
        }
        Ok(self.status())
    }

    fn step(&mut self, pipeline: &Pipeline, answers: &dyn AnswerProvider) -> Result<(), SessionError> {
        let before = self.events.len();
        if let Some(round) = self.state.round.clone() {
            let next = round.todo.iter().find(|id| !round.rewritten.contains(*id)).cloned();
            match next {
                Some(parent) => self.rewrite_leaf(pipeline, &parent, round.iteration)?,
                None => {
                    for id in self.state.unevaluated() {
                        if !self.evaluate_and_gate(pipeline, &id, round.iteration)? {
                            break;
                        }
                    }
                }
            }
        } else if let Some(id) = self.state.unevaluated().first().cloned() {
            let iteration = self.state.iterations_completed;
            self.evaluate_and_gate(pipeline, &id, iteration)?;
        } else {
            self.open_round(pipeline, answers)?;
        }
        if self.events.len() == before {
            return Err(SessionError::Stalled);
        }
        Ok(())
    }

    /// Runs `f` up to `1 + stage_retries` times, recording each failure.
    /// `None` means the stage failed for good and the session is failed.
    fn attempt<T, E: Display>(
        &mut self,
        pipeline: &Pipeline,
        stage: Stage,
        iteration: u32,
        mut f: impl FnMut() -> Result<T, E>,
    ) -> Result<Option<T>, SessionError> {
        let mut tries = 0;
        loop {
            match f() {
                Ok(value) => return Ok(Some(value)),
                Err(e) => {
                    let fatal = tries >= pipeline.stage_retries;
                    tracing::warn!(?stage, fatal, error = %e, "stage failed");
                    self.push(
                        iteration,
                        EventBody::Error {
                            stage,
                            message: e.to_string(),
                            fatal,
                        },
                    )?;
                    if fatal {
                        return Ok(None);
                    }
                    tries += 1;
                }
            }
        }
    }

    /// Returns false when the stage failed.
    fn evaluate_and_gate(
        &mut self,
        pipeline: &Pipeline,
        id: &RequirementId,
        iteration: u32,
    ) -> Result<bool, SessionError> {
        let requirement = self.state.requirements[id].clone();
        let standard = self.state.header.standard_configured;
        let backend = pipeline.evaluator.clone();
        let Some(report) = self.attempt(pipeline, Stage::Evaluate, iteration, || {
            evaluate(&requirement, backend.as_ref(), standard)
        })?
        else {
            return Ok(false);
        };
        let passed = gate(&report, &self.state.header.policy);
        let score = compute_quality(&report);
        self.push(iteration, EventBody::Evaluated { report, score })?;
        self.push(
            iteration,
            EventBody::Gated {
                requirement_id: id.clone(),
                passed,
            },
        )?;
        Ok(true)
    }

    fn missing_for(&self, id: &RequirementId) -> BTreeSet<Characteristic> {
        let report = &self.state.reports[id];
        let mut missing = unfulfilled(report);
        missing.extend(
            self.state
                .header
                .policy
                .mandatory()
                .iter()
                .filter(|c| !report.is_fulfilled(**c)),
        );
        missing
    }

    fn open_round(&mut self, pipeline: &Pipeline, answers: &dyn AnswerProvider) -> Result<(), SessionError> {
        let iteration = self.state.iterations_completed + 1;
        for leaf in self.state.failing_leaves() {
            let requirement = self.state.requirements[&leaf].clone();
            let missing = self.missing_for(&leaf);
            let first_id = self.state.next_question_number();
            let backend = pipeline.clarifier.clone();
            let Some((generated, selected)) =
                self.attempt(pipeline, Stage::Clarify, iteration, || {
                    let generated = generate_questions(&requirement, &missing, backend.as_ref(), first_id)?;
                    let selected = select_covering(&generated.questions, &missing)?;
                    Ok::<_, crate::clarifier::ClarifierError>((generated, selected))
                })?
            else {
                return Ok(());
            };
            let suggestions = self.suggest(pipeline, &selected, iteration)?;
            self.push(
                iteration,
                EventBody::QuestionsGenerated {
                    requirement_id: leaf.clone(),
                    questions: generated.questions,
                    selected: selected.iter().map(|q| q.id.clone()).collect(),
                    dropped: generated.dropped,
                    suggestions,
                },
            )?;
        }
        if self.state.header.mode == RunMode::Automatic {
            for question in self.pending_questions() {
                let answer = match self.state.suggestions.get(&question.id) {
                    Some(s) => Some((s.answer.clone(), AnswerSource::Rag, s.provenance.clone())),
                    None => {
                        let requirement = &self.state.requirements[&question.requirement_id];
                        answers
                            .answer(requirement, &question)
                            .map(|a| (a.text, a.source, Vec::new()))
                    }
                };
                if let Some((text, source, provenance)) = answer {
                    self.attach_answer(&question.id, &text, source, provenance)?;
                }
            }
        }
        Ok(())
    }

    /// Retrieval answers for the selected questions, when an index is set.
    fn suggest(
        &mut self,
        pipeline: &Pipeline,
        selected: &[ClarifyingQuestion],
        iteration: u32,
    ) -> Result<Vec<RagSuggestion>, SessionError> {
        let Some(store) = pipeline.rag.clone() else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for question in selected {
            match answer_question(&store, question, pipeline.rag_k, pipeline.answerer.as_ref()) {
                Ok(exchange) => {
                    if let Some(answer) = exchange.answer() {
                        out.push(RagSuggestion {
                            question_id: question.id.clone(),
                            answer: answer.to_string(),
                            provenance: exchange.provenance().to_vec(),
                        });
                    }
                }
                // an unanswerable question falls through to people
                Err(e) => self.push(
                    iteration,
                    EventBody::Error {
                        stage: Stage::Answer,
                        message: e.to_string(),
                        fatal: false,
                    },
                )?,
            }
        }
        Ok(out)
    }

    fn rewrite_leaf(
        &mut self,
        pipeline: &Pipeline,
        parent: &RequirementId,
        iteration: u32,
    ) -> Result<(), SessionError> {
        let requirement = self.state.requirements[parent].clone();
        let exchanges: Vec<_> = self
            .state
            .round_exchanges(parent)
            .into_iter()
            .cloned()
            .collect();
        let selected: Vec<_> = exchanges.iter().map(|e| e.question().clone()).collect();
        let first_id = self.state.next_requirement_number();
        let backend = pipeline.rewriter.clone();
        let Some(result) = self.attempt(pipeline, Stage::Rewrite, iteration, || {
            rewrite(
                &requirement,
                &selected,
                &exchanges,
                &pipeline.patterns,
                backend.as_ref(),
                first_id,
            )
        })?
        else {
            return Ok(());
        };
        let children: Vec<RequirementId> =
            result.requirements.iter().map(|r| r.id().clone()).collect();
        let body = if children.len() >= 2 {
            EventBody::Split {
                parent_id: parent.clone(),
                result,
            }
        } else {
            EventBody::Rewritten {
                parent_id: parent.clone(),
                result,
            }
        };
        self.push(iteration, body)?;
        for child in children {
            if !self.evaluate_and_gate(pipeline, &child, iteration)? {
                break;
            }
        }
        Ok(())
    }
}
