use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::characteristic::CharacteristicReport;
use crate::clarifier::{ClarificationExchange, ClarifyingQuestion, DroppedRow};
use crate::evaluator::GatePolicy;
use crate::metric::QualityScore;
use crate::ragstore::ChunkId;
use crate::requirement::{Requirement, RequirementId};
use crate::rewriter::RewriteResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// Answers come from the index and the answer provider without pausing.
    #[default]
    Automatic,
    /// Every selected question waits for a human answer.
    Interactive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Running,
    AwaitingAnswers,
    Converged,
    Exhausted,
    Failed,
}

impl SessionStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, Self::Converged | Self::Exhausted | Self::Failed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Evaluate,
    Clarify,
    Answer,
    Rewrite,
}

/// Everything fixed at session creation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub root: Requirement,
    pub mode: RunMode,
    pub policy: GatePolicy,
    pub max_iterations: u32,
    pub standard_configured: bool,
}

/// A retrieval answer offered for a question without being attached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RagSuggestion {
    pub question_id: String,
    pub answer: String,
    pub provenance: Vec<ChunkId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    Evaluated {
        report: CharacteristicReport,
        score: QualityScore,
    },
    Gated {
        requirement_id: RequirementId,
        passed: bool,
    },
    QuestionsGenerated {
        requirement_id: RequirementId,
        questions: Vec<ClarifyingQuestion>,
        selected: Vec<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        dropped: Vec<DroppedRow>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        suggestions: Vec<RagSuggestion>,
    },
    AnswerAttached {
        exchange: ClarificationExchange,
    },
    Rewritten {
        parent_id: RequirementId,
        result: RewriteResult,
    },
    Split {
        parent_id: RequirementId,
        result: RewriteResult,
    },
    Error {
        stage: Stage,
        message: String,
        fatal: bool,
    },
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Evaluated { .. } => "evaluated",
            Self::Gated { .. } => "gated",
            Self::QuestionsGenerated { .. } => "questions_generated",
            Self::AnswerAttached { .. } => "answer_attached",
            Self::Rewritten { .. } => "rewritten",
            Self::Split { .. } => "split",
            Self::Error { .. } => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    pub timestamp: DateTime<Utc>,
    pub iteration: u32,
    #[serde(flatten)]
    pub body: EventBody,
}
