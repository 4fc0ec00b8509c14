//! Clarifying questions for unfulfilled characteristics, and their answers.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::characteristic::Characteristic;
use crate::gateway::{
    parse_table, request_with_recovery, Backend, GatewayError, ParseError, RecoveryError,
    FORMAT_RETRIES,
};
use crate::prompting::PromptSpec;
use crate::ragstore::ChunkId;
use crate::requirement::{Requirement, RequirementId};

pub const INSTRUCTION_PREFIX: &str =
    "Define questions whose answers help to comply with the missing characteristics";

pub const OUTPUT_FORMAT: &str =
    "Your answer should be only a table with the columns [Feature Name, Suggested Questions]";

pub const TABLE_HEADER: [&str; 2] = ["Feature Name", "Suggested Questions"];

#[derive(Debug, Error)]
pub enum ClarifierError {
    #[error("no missing characteristics to ask about")]
    NothingMissing,
    #[error(transparent)]
    Backend(#[from] GatewayError),
    #[error("question generation failed after {attempts} completion(s): {reason}")]
    Failed {
        attempts: usize,
        reason: String,
        raw: String,
    },
    #[error("no question covers {}", names(.0))]
    Uncovered(Vec<Characteristic>),
    #[error("exchange {0} is already answered")]
    AlreadyAnswered(String),
    #[error("answer is empty")]
    EmptyAnswer,
    #[error("provenance must be non-empty exactly when the answer comes from retrieval")]
    Provenance,
}

fn names(cs: &[Characteristic]) -> String {
    cs.iter().map(|c| c.name()).collect::<Vec<_>>().join(", ")
}

/// "a", "a and b", "a, b and c".
fn spoken_list(cs: &[Characteristic]) -> String {
    match cs {
        [] => String::new(),
        [only] => only.name().to_string(),
        [init @ .., last] => format!("{} and {}", names(init), last.name()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClarifyingQuestion {
    pub id: String,
    pub requirement_id: RequirementId,
    pub target: Characteristic,
    pub text: String,
}

/// A table row naming a characteristic that was not asked for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedRow {
    pub feature: String,
    pub questions: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedQuestions {
    pub questions: Vec<ClarifyingQuestion>,
    pub dropped: Vec<DroppedRow>,
}

pub fn question_prompt(requirement_text: &str, missing: &[Characteristic]) -> PromptSpec {
    PromptSpec::new(format!("{INSTRUCTION_PREFIX}: \"{}\".", spoken_list(missing)))
        .expect("non-empty instruction")
        .with_input(requirement_text)
        .with_output_format(OUTPUT_FORMAT)
}

/// Splits a cell holding several questions at `?` boundaries.
pub fn split_questions(cell: &str) -> Vec<String> {
    let cell = cell.replace("<br>", " ").replace("<br/>", " ");
    let mut out = Vec::new();
    let mut current = String::new();
    for c in cell.chars() {
        current.push(c);
        if c == '?' {
            push_question(&mut out, &current);
            current.clear();
        }
    }
    push_question(&mut out, &current);
    out
}

fn push_question(out: &mut Vec<String>, raw: &str) {
    let trimmed = raw
        .trim()
        .trim_start_matches(|c: char| c == '-' || c == '*' || c == '•' || c == ',' || c == ';')
        .trim();
    let trimmed = match trimmed.split_once(". ") {
        Some((n, rest)) if !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()) => rest.trim(),
        _ => trimmed,
    };
    if trimmed.chars().any(char::is_alphanumeric) {
        out.push(trimmed.to_string());
    }
}

/// Reads a question table. Rows outside `missing` are returned as dropped;
/// every member of `missing` must receive at least one question.
pub fn parse_questions(
    text: &str,
    requirement_id: &RequirementId,
    missing: &BTreeSet<Characteristic>,
    first_id: usize,
) -> Result<GeneratedQuestions, ParseError> {
    let table = parse_table(text, &TABLE_HEADER)?;
    let mut questions = Vec::new();
    let mut dropped = Vec::new();
    for row in table.rows() {
        let name = row[0].trim().trim_matches('*').trim();
        let target = match name.parse::<Characteristic>() {
            Ok(c) if missing.contains(&c) => c,
            _ => {
                dropped.push(DroppedRow {
                    feature: row[0].clone(),
                    questions: row[1].clone(),
                });
                continue;
            }
        };
        for text in split_questions(&row[1]) {
            questions.push(ClarifyingQuestion {
                id: format!("q{}", first_id + questions.len()),
                requirement_id: requirement_id.clone(),
                target,
                text,
            });
        }
    }
    let uncovered: Vec<Characteristic> = missing
        .iter()
        .copied()
        .filter(|c| !questions.iter().any(|q| q.target == *c))
        .collect();
    if !uncovered.is_empty() {
        return Err(ParseError::Schema(format!("no question for {}", names(&uncovered))));
    }
    Ok(GeneratedQuestions { questions, dropped })
}

/// Asks `backend` for questions about `missing`. Ids are `q{first_id}`,
/// `q{first_id + 1}` and so on.
pub fn generate_questions(
    requirement: &Requirement,
    missing: &BTreeSet<Characteristic>,
    backend: &dyn Backend,
    first_id: usize,
) -> Result<GeneratedQuestions, ClarifierError> {
    if missing.is_empty() {
        return Err(ClarifierError::NothingMissing);
    }
    let ordered: Vec<Characteristic> = missing.iter().copied().collect();
    let spec = question_prompt(requirement.text(), &ordered);
    let result = request_with_recovery(backend, &spec, FORMAT_RETRIES, |text| {
        parse_questions(text, requirement.id(), missing, first_id)
    });
    match result {
        Ok((generated, _)) => {
            for row in &generated.dropped {
                tracing::warn!(feature = %row.feature, "dropping questions for a characteristic that was not missing");
            }
            Ok(generated)
        }
        Err(RecoveryError::Backend(e)) => Err(e.into()),
        Err(RecoveryError::Unparseable {
            attempts,
            raw,
            error,
        }) => Err(ClarifierError::Failed {
            attempts,
            reason: error.to_string(),
            raw,
        }),
    }
}

/// One question per missing characteristic, in canonical order: the first
/// listed question for each.
pub fn select_covering(
    questions: &[ClarifyingQuestion],
    missing: &BTreeSet<Characteristic>,
) -> Result<Vec<ClarifyingQuestion>, ClarifierError> {
    let mut selected = Vec::new();
    let mut uncovered = Vec::new();
    for c in Characteristic::ALL.into_iter().filter(|c| missing.contains(c)) {
        match questions.iter().find(|q| q.target == c) {
            Some(q) => selected.push(q.clone()),
            None => uncovered.push(c),
        }
    }
    if uncovered.is_empty() {
        Ok(selected)
    } else {
        Err(ClarifierError::Uncovered(uncovered))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerSource {
    Stakeholder,
    Rag,
    Synthetic,
}

/// A question and, once given, its answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClarificationExchange {
    question: ClarifyingQuestion,
    answer: Option<String>,
    source: Option<AnswerSource>,
    provenance: Vec<ChunkId>,
}

impl ClarificationExchange {
    pub fn open(question: ClarifyingQuestion) -> Self {
        Self {
            question,
            answer: None,
            source: None,
            provenance: Vec::new(),
        }
    }

    pub fn question(&self) -> &ClarifyingQuestion {
        &self.question
    }

    pub fn answer(&self) -> Option<&str> {
        self.answer.as_deref()
    }

    pub fn source(&self) -> Option<AnswerSource> {
        self.source
    }

    pub fn provenance(&self) -> &[ChunkId] {
        &self.provenance
    }

    pub fn is_answered(&self) -> bool {
        self.answer.is_some()
    }

    /// Records the answer. Answers are write-once.
    pub fn attach_answer(
        &self,
        answer: &str,
        source: AnswerSource,
        provenance: Vec<ChunkId>,
    ) -> Result<Self, ClarifierError> {
        if self.answer.is_some() {
            return Err(ClarifierError::AlreadyAnswered(self.question.id.clone()));
        }
        let answer = answer.trim();
        if answer.is_empty() {
            return Err(ClarifierError::EmptyAnswer);
        }
        if (source == AnswerSource::Rag) == provenance.is_empty() {
            return Err(ClarifierError::Provenance);
        }
        Ok(Self {
            question: self.question.clone(),
            answer: Some(answer.to_string()),
            source: Some(source),
            provenance,
        })
    }
}
