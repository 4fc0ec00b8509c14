//! Rewriting a requirement from its answered questions, constrained to
//! approved sentence patterns.

pub mod pattern;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clarifier::{ClarificationExchange, ClarifyingQuestion};
use crate::gateway::{request_with_recovery, Backend, GatewayError, RecoveryError};
use crate::prompting::PromptSpec;
use crate::requirement::{Origin, Requirement, RequirementId};
use pattern::{match_pattern, RequirementPattern};

pub const INSTRUCTION: &str = "Improve the requirement using the answers to questions. The improved requirement must be expressed according to the Proposed Format.";

pub const GENERIC_INSTRUCTION: &str =
    "Indicate how the following software requirement can be improved.";

pub const OUTPUT_FORMAT: &str = "Write one requirement per line, each starting with the identifier of the format it follows and a colon, for example \"F1: The system shall ...\". Write more than one line only if the requirement must be split.";

/// Completions re-issued when the candidates do not conform.
pub const CONFORMANCE_RETRIES: usize = 1;

#[derive(Debug, Error)]
pub enum RewriteError {
    #[error("no requirement patterns configured")]
    NoPatterns,
    #[error("selected question(s) without an answer: {}", .0.join(", "))]
    Unanswered(Vec<String>),
    #[error(transparent)]
    Backend(#[from] GatewayError),
    #[error("rewrite does not conform after {attempts} completion(s): {reason}")]
    Nonconforming {
        attempts: usize,
        reason: String,
        raw: String,
    },
    #[error(transparent)]
    Invalid(#[from] crate::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteResult {
    pub requirements: Vec<Requirement>,
    pub pattern_id_per_requirement: Vec<String>,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct CandidateError(String);

/// A requirement line of the rewrite reply, before ids are assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub pattern_id: String,
    pub text: String,
}

fn rewrite_input(original: &str, exchanges: &[ClarificationExchange]) -> String {
    let mut input = format!("Requirement: \"{}\"", original.trim());
    if !exchanges.is_empty() {
        input.push_str("\n\nQuestions and answers:");
        for (i, e) in exchanges.iter().enumerate() {
            input.push_str(&format!(
                "\nQ{n}- {}\nA{n}- {}",
                e.question().text,
                e.answer().unwrap_or(""),
                n = i + 1
            ));
        }
    }
    input
}

fn formats_context(patterns: &[RequirementPattern]) -> String {
    let mut context = String::from("Proposed formats:");
    for p in patterns {
        context.push_str(&format!("\n{p}"));
    }
    context
}

pub fn rewrite_prompt(
    original: &str,
    exchanges: &[ClarificationExchange],
    patterns: &[RequirementPattern],
) -> PromptSpec {
    PromptSpec::new(INSTRUCTION)
        .expect("non-empty instruction")
        .with_context(formats_context(patterns))
        .with_input(rewrite_input(original, exchanges))
        .with_output_format(OUTPUT_FORMAT)
}

/// Reads the `ID: requirement` lines of a reply and checks each against
/// its declared pattern. Other lines are returned as the rationale.
pub fn parse_candidates(
    reply: &str,
    patterns: &[RequirementPattern],
) -> Result<(Vec<Candidate>, String), CandidateError> {
    let mut candidates = Vec::new();
    let mut rationale = Vec::new();
    for line in reply.lines() {
        let line = line.trim();
        let stripped = line.trim_start_matches(['-', '*', ' ']).trim();
        let declared = stripped.split_once(':').and_then(|(id, text)| {
            let id = id.trim().trim_matches('*');
            patterns.iter().find(|p| p.id() == id).map(|p| (p, text.trim()))
        });
        match declared {
            Some((pattern, text)) => {
                if match_pattern(text, pattern).is_none() {
                    return Err(CandidateError(format!(
                        "`{text}` does not follow {}",
                        pattern.id()
                    )));
                }
                candidates.push(Candidate {
                    pattern_id: pattern.id().to_string(),
                    text: text.to_string(),
                });
            }
            None if !line.is_empty() => rationale.push(line.to_string()),
            None => {}
        }
    }
    if candidates.is_empty() {
        return Err(CandidateError("no line starts with a format identifier".into()));
    }
    Ok((candidates, rationale.join("\n")))
}

/// Exchanges for `selected`, in selection order; every one must be answered.
pub fn answered_exchanges(
    selected: &[ClarifyingQuestion],
    exchanges: &[ClarificationExchange],
) -> Result<Vec<ClarificationExchange>, RewriteError> {
    let mut out = Vec::with_capacity(selected.len());
    let mut missing = Vec::new();
    for q in selected {
        match exchanges
            .iter()
            .find(|e| e.question().id == q.id && e.is_answered())
        {
            Some(e) => out.push(e.clone()),
            None => missing.push(q.id.clone()),
        }
    }
    if missing.is_empty() {
        Ok(out)
    } else {
        Err(RewriteError::Unanswered(missing))
    }
}

/// Rewrites `requirement` from the answers to the `selected` questions.
/// New requirements get ids `r{first_id}`, `r{first_id + 1}`, ...
pub fn rewrite(
    requirement: &Requirement,
    selected: &[ClarifyingQuestion],
    exchanges: &[ClarificationExchange],
    patterns: &[RequirementPattern],
    backend: &dyn Backend,
    first_id: usize,
) -> Result<RewriteResult, RewriteError> {
    if patterns.is_empty() {
        return Err(RewriteError::NoPatterns);
    }
    let answered = answered_exchanges(selected, exchanges)?;
    let spec = rewrite_prompt(requirement.text(), &answered, patterns);
    let (candidates, rationale) =
        match request_with_recovery(backend, &spec, CONFORMANCE_RETRIES, |reply| {
            parse_candidates(reply, patterns)
        }) {
            Ok(((candidates, rationale), _)) => (candidates, rationale),
            Err(RecoveryError::Backend(e)) => return Err(e.into()),
            Err(RecoveryError::Unparseable {
                attempts,
                raw,
                error,
            }) => {
                return Err(RewriteError::Nonconforming {
                    attempts,
                    reason: error.to_string(),
                    raw,
                })
            }
        };
    let split = candidates.len() >= 2;
    let mut requirements = Vec::with_capacity(candidates.len());
    for (i, c) in candidates.iter().enumerate() {
        requirements.push(Requirement::derived(
            RequirementId::new(format!("r{}", first_id + i)),
            c.text.clone(),
            Origin::FrameworkRewrite,
            requirement.id().clone(),
            split.then_some(i as u32 + 1),
        )?);
    }
    Ok(RewriteResult {
        requirements,
        pattern_id_per_requirement: candidates.into_iter().map(|c| c.pattern_id).collect(),
        rationale,
    })
}

/// The baseline: ask for an improvement with no characteristics, questions
/// or patterns.
pub fn generic_rewrite(
    requirement: &Requirement,
    backend: &dyn Backend,
    id: RequirementId,
) -> Result<Requirement, RewriteError> {
    let spec = PromptSpec::new(GENERIC_INSTRUCTION)
        .expect("non-empty instruction")
        .with_input(requirement.text());
    let reply = backend.complete(&spec.render())?.text;
    let text = reply
        .lines()
        .find_map(|l| l.trim().strip_prefix("Improved Requirement:"))
        .map(str::trim)
        .unwrap_or(reply.trim())
        .to_string();
    Ok(Requirement::derived(
        id,
        text,
        Origin::GenericRewrite,
        requirement.id().clone(),
        None,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristic::Characteristic;
    use crate::clarifier::AnswerSource;
    use crate::gateway::{Completion, HeuristicBackend};
    use pattern::default_patterns;

    fn authored(text: &str) -> Requirement {
        Requirement::authored(RequirementId::new("r1"), text).unwrap()
    }

    fn answered(id: &str, target: Characteristic, q: &str, a: &str) -> (ClarifyingQuestion, ClarificationExchange) {
        let question = ClarifyingQuestion {
            id: id.into(),
            requirement_id: RequirementId::new("r1"),
            target,
            text: q.into(),
        };
        let exchange = ClarificationExchange::open(question.clone())
            .attach_answer(a, AnswerSource::Stakeholder, vec![])
            .unwrap();
        (question, exchange)
    }

    #[test]
    fn prompt_carries_formats_and_numbered_pairs() {
        let (_, e) = answered("q1", Characteristic::Verifiable, "How fast?", "Within 2 seconds.");
        let text = rewrite_prompt("The system must work.", &[e], &default_patterns()).render();
        assert!(text.contains("Proposed formats:\nF1- The <entity> shall"));
        assert!(text.contains("Q1- How fast?\nA1- Within 2 seconds."));
        assert!(text.starts_with("Instruction:\nImprove the requirement"));
    }

    #[test]
    fn split_children_are_numbered() {
        let (q, e) = answered(
            "q1",
            Characteristic::Singular,
            "Should this requirement be split into separate requirements, one per capability?",
            "Yes.",
        );
        let req = authored("The system will have a user-friendly interface and support all common browsers.");
        let result =
            rewrite(&req, &[q], &[e], &default_patterns(), &HeuristicBackend::default(), 2).unwrap();
        assert_eq!(result.requirements.len(), 2);
        assert_eq!(result.requirements[0].id().as_str(), "r2");
        assert_eq!(result.requirements[1].split_index(), Some(2));
        assert!(result.requirements.iter().all(|r| r.parent_id() == Some(req.id())));
        assert_eq!(result.pattern_id_per_requirement, ["F1", "F1"]);
    }

    #[test]
    fn single_rewrite_has_no_split_index() {
        let req = authored("A customer can cancel an order if he has not yet received it.");
        let result = rewrite(&req, &[], &[], &default_patterns(), &HeuristicBackend::default(), 2).unwrap();
        assert_eq!(result.requirements.len(), 1);
        assert_eq!(result.requirements[0].split_index(), None);
        assert_eq!(result.pattern_id_per_requirement, ["F2"]);
    }

    #[test]
    fn unanswered_selection_is_refused() {
        let (q, _) = answered("q1", Characteristic::Complete, "When?", "Now.");
        let req = authored("The system must work.");
        assert!(matches!(
            rewrite(&req, &[q], &[], &default_patterns(), &HeuristicBackend::default(), 2),
            Err(RewriteError::Unanswered(ids)) if ids == ["q1"]
        ));
        assert!(matches!(
            rewrite(&req, &[], &[], &[], &HeuristicBackend::default(), 2),
            Err(RewriteError::NoPatterns)
        ));
    }

    struct Fixed(&'static str);

    impl Backend for Fixed {
        fn id(&self) -> &str {
            "fixed"
        }

        fn complete(&self, _prompt: &str) -> Result<Completion, GatewayError> {
            Ok(Completion {
                text: self.0.into(),
                backend_id: "fixed".into(),
                latency: Default::default(),
                attempt: 1,
            })
        }
    }

    #[test]
    fn nonconforming_reply_fails_after_one_retry() {
        let req = authored("The system must work.");
        match rewrite(&req, &[], &[], &default_patterns(), &Fixed("F1: It works."), 2) {
            Err(RewriteError::Nonconforming { attempts, raw, .. }) => {
                assert_eq!(attempts, 2);
                assert_eq!(raw, "F1: It works.");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rationale_lines_are_kept_apart() {
        let (c, rationale) = parse_candidates(
            "Here is the improved requirement:\n**F1**: The system shall export the report in CSV format within 5 seconds.",
            &default_patterns(),
        )
        .unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(rationale, "Here is the improved requirement:");
    }

    #[test]
    fn generic_baseline() {
        let req = authored("The system must allow the inventory manager to generate a list of missing products.");
        let out = generic_rewrite(&req, &HeuristicBackend::default(), RequirementId::new("g1")).unwrap();
        assert_eq!(out.origin(), Origin::GenericRewrite);
        assert!(out.text().starts_with("The system shall allow"));
    }
}
