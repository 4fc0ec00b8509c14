use std::path::Path;

use serde::Deserialize;

use crate::characteristic::Characteristic;
use crate::clarifier::{AnswerSource, ClarifyingQuestion};
use crate::requirement::Requirement;

use super::SessionError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvidedAnswer {
    pub text: String,
    pub source: AnswerSource,
}

/// Supplies answers to clarifying questions outside retrieval.
pub trait AnswerProvider {
    fn answer(&self, requirement: &Requirement, question: &ClarifyingQuestion) -> Option<ProvidedAnswer>;
}

/// Never answers; every question waits for a human.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoAnswers;

impl AnswerProvider for NoAnswers {
    fn answer(&self, _: &Requirement, _: &ClarifyingQuestion) -> Option<ProvidedAnswer> {
        None
    }
}

impl<F> AnswerProvider for F
where
    F: Fn(&Requirement, &ClarifyingQuestion) -> Option<ProvidedAnswer>,
{
    fn answer(&self, requirement: &Requirement, question: &ClarifyingQuestion) -> Option<ProvidedAnswer> {
        self(requirement, question)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerRule {
    pub target: Characteristic,
    /// Case-insensitive substring the requirement text must contain.
    #[serde(default)]
    pub applies_to: Option<String>,
    /// Case-insensitive substring the question text must contain.
    #[serde(default)]
    pub question: Option<String>,
    pub answer: String,
    #[serde(default = "stakeholder")]
    pub source: AnswerSource,
}

fn stakeholder() -> AnswerSource {
    AnswerSource::Stakeholder
}

/// Prepared answers, matched by characteristic and optional text filters.
/// The first matching rule wins.
#[derive(Debug, Clone, PartialEq, Eq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerBook {
    #[serde(default)]
    pub answers: Vec<AnswerRule>,
}

fn contains_ci(haystack: &str, needle: &str) -> bool {
    haystack.to_lowercase().contains(&needle.to_lowercase())
}

impl AnswerBook {
    pub fn parse(source: &str) -> Result<Self, SessionError> {
        let book: Self =
            toml::from_str(source).map_err(|e| SessionError::Invalid(format!("answers file: {e}")))?;
        if let Some(rule) = book.answers.iter().find(|r| r.answer.trim().is_empty()) {
            return Err(SessionError::Invalid(format!(
                "answers file: empty answer for {}",
                rule.target
            )));
        }
        if book.answers.iter().any(|r| r.source == AnswerSource::Rag) {
            return Err(SessionError::Invalid(
                "answers file: source = \"rag\" is reserved for retrieval".into(),
            ));
        }
        Ok(book)
    }

    pub fn load(path: &Path) -> Result<Self, SessionError> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| SessionError::Invalid(format!("answers file {}: {e}", path.display())))?;
        Self::parse(&source)
    }
}

impl AnswerProvider for AnswerBook {
    fn answer(&self, requirement: &Requirement, question: &ClarifyingQuestion) -> Option<ProvidedAnswer> {
        self.answers
            .iter()
            .find(|r| {
                r.target == question.target
                    && r.applies_to.as_deref().is_none_or(|a| contains_ci(requirement.text(), a))
                    && r.question.as_deref().is_none_or(|q| contains_ci(&question.text, q))
            })
            .map(|r| ProvidedAnswer {
                text: r.answer.trim().to_string(),
                source: r.source,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::requirement::RequirementId;

    fn q(target: Characteristic, text: &str) -> ClarifyingQuestion {
        ClarifyingQuestion {
            id: "q1".into(),
            requirement_id: RequirementId::new("r1"),
            target,
            text: text.into(),
        }
    }

    #[test]
    fn first_matching_rule_wins() {
        let book = AnswerBook::parse(
            r#"
[[answers]]
target = "Verifiable"
applies_to = "browsers"
answer = "The latest 2 versions."

[[answers]]
target = "Verifiable"
answer = "Within 5 seconds."
source = "synthetic"
"#,
        )
        .unwrap();
        let browsers = Requirement::authored(RequirementId::new("r1"), "Support all BROWSERS.").unwrap();
        let other = Requirement::authored(RequirementId::new("r2"), "Export data.").unwrap();
        let question = q(Characteristic::Verifiable, "How?");
        assert_eq!(book.answer(&browsers, &question).unwrap().text, "The latest 2 versions.");
        let fallback = book.answer(&other, &question).unwrap();
        assert_eq!(fallback.source, AnswerSource::Synthetic);
        assert!(book.answer(&other, &q(Characteristic::Complete, "How?")).is_none());
    }

    #[test]
    fn rejects_bad_books() {
        assert!(AnswerBook::parse("[[answers]]\ntarget = \"Nope\"\nanswer = \"x\"").is_err());
        assert!(AnswerBook::parse("[[answers]]\ntarget = \"Complete\"\nanswer = \" \"").is_err());
        assert!(AnswerBook::parse("[[answers]]\ntarget = \"Complete\"\nanswer = \"x\"\nsource = \"rag\"").is_err());
    }
}
