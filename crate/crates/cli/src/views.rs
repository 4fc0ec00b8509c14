//! Serializable views of sessions shared by the command line and the API.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::Serialize;

use reqrefine::clarifier::AnswerSource;
use reqrefine::orchestrator::{EventBody, RagSuggestion, RefinementSession, RunMode, SessionState, SessionStatus};
use reqrefine::ragstore::ChunkId;
use reqrefine::{Characteristic, QualityScore, RequirementId};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScorePoint {
    pub seq: u64,
    pub iteration: u32,
    pub requirement_id: RequirementId,
    pub score: QualityScore,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionSummary {
    pub id: String,
    pub status: SessionStatus,
    pub mode: RunMode,
    pub created_at: DateTime<Utc>,
    pub root_text: String,
    pub iterations_completed: u32,
    pub max_iterations: u32,
    pub leaf_count: usize,
    pub pending_questions: usize,
    pub score_history: Vec<ScorePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_path: Option<String>,
}

impl SessionSummary {
    pub fn of(session: &RefinementSession) -> Self {
        let state = session.state();
        let score_history = session
            .events()
            .iter()
            .filter_map(|e| match &e.body {
                EventBody::Evaluated { report, score } => Some(ScorePoint {
                    seq: e.seq,
                    iteration: e.iteration,
                    requirement_id: report.requirement_id().clone(),
                    score: *score,
                }),
                _ => None,
            })
            .collect();
        Self {
            id: session.id().to_string(),
            status: state.status,
            mode: state.header.mode,
            created_at: state.header.created_at,
            root_text: state.header.root.text().to_string(),
            iterations_completed: state.iterations_completed,
            max_iterations: state.header.max_iterations,
            leaf_count: state.leaves.len(),
            pending_questions: state.pending_questions().len(),
            score_history,
            failure: state.failure.clone(),
            log_path: session.log_path().map(|p| p.display().to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictView {
    pub fulfilled: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequirementView {
    pub id: RequirementId,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<RequirementId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern_id: Option<String>,
    pub score: Option<QualityScore>,
    pub passed: Option<bool>,
    pub verdicts: BTreeMap<Characteristic, VerdictView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafView {
    #[serde(flatten)]
    pub leaf: RequirementView,
    /// The requirement this leaf was rewritten from.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent: Option<RequirementView>,
}

fn pattern_of(state: &SessionState, id: &RequirementId) -> Option<String> {
    state.rewrites.iter().find_map(|r| {
        r.children
            .iter()
            .position(|c| c == id)
            .map(|i| r.pattern_ids[i].clone())
    })
}

fn requirement_view(state: &SessionState, id: &RequirementId) -> RequirementView {
    let requirement = &state.requirements[id];
    let verdicts = state
        .reports
        .get(id)
        .map(|report| {
            report
                .assessed()
                .iter()
                .map(|c| {
                    let v = report.verdict(*c);
                    (
                        *c,
                        VerdictView {
                            fulfilled: v.fulfilled,
                            detail: v.detail.clone(),
                        },
                    )
                })
                .collect()
        })
        .unwrap_or_default();
    RequirementView {
        id: id.clone(),
        text: requirement.text().to_string(),
        parent_id: requirement.parent_id().cloned(),
        pattern_id: pattern_of(state, id),
        score: state.scores.get(id).copied(),
        passed: state.gates.get(id).copied(),
        verdicts,
    }
}

pub fn leaves(state: &SessionState) -> Vec<LeafView> {
    state
        .leaves
        .iter()
        .map(|id| {
            let leaf = requirement_view(state, id);
            let parent = leaf
                .parent_id
                .as_ref()
                .filter(|p| state.requirements.contains_key(*p))
                .map(|p| requirement_view(state, p));
            LeafView { leaf, parent }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionStatus {
    /// Selected in the open round and waiting for an answer.
    Pending,
    Answered,
    /// Generated but not selected, or left behind by a closed round.
    Unanswered,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionView {
    pub exchange_id: String,
    pub requirement_id: RequirementId,
    pub target: Characteristic,
    pub text: String,
    pub status: QuestionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<AnswerSource>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<ChunkId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<RagSuggestion>,
}

pub fn questions(state: &SessionState) -> Vec<QuestionView> {
    let pending: Vec<&str> = state
        .pending_questions()
        .into_iter()
        .map(|q| q.id.as_str())
        .collect();
    state
        .questions
        .iter()
        .map(|q| {
            let exchange = state.exchanges.get(&q.id);
            let answered = exchange.is_some_and(|e| e.is_answered());
            let status = if answered {
                QuestionStatus::Answered
            } else if pending.contains(&q.id.as_str()) {
                QuestionStatus::Pending
            } else {
                QuestionStatus::Unanswered
            };
            QuestionView {
                exchange_id: q.id.clone(),
                requirement_id: q.requirement_id.clone(),
                target: q.target,
                text: q.text.clone(),
                status,
                answer: exchange.and_then(|e| e.answer()).map(str::to_string),
                source: exchange.and_then(|e| e.source()),
                provenance: exchange.map(|e| e.provenance().to_vec()).unwrap_or_default(),
                suggestion: state.suggestions.get(&q.id).cloned(),
            }
        })
        .collect()
}
