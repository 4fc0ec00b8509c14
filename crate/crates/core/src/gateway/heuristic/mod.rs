//! Deterministic rule-based backend.
//!
//! [`HeuristicBackend`] answers the same prompts the pipeline sends to a
//! remote model, recognising the task from the prompt's instruction. Its
//! replies are pure functions of the prompt, so offline runs are
//! reproducible byte for byte.

mod judge;
pub(crate) mod lang;
mod rewrite;

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

pub use judge::heuristic_judge;

use super::{Backend, Completion, GatewayError, ParsedTable};
use crate::characteristic::Characteristic;
use crate::prompting::PromptSections;
use crate::rewriter::pattern::{default_patterns, RequirementPattern};
use lang::{content_words, sentences};

/// Reply the offline answerer gives when the context holds nothing useful.
pub const NO_ANSWER: &str = "NO_ANSWER";

const DEFAULT_LEXICON: &str = "\
# vague or unbounded terms
user-friendly
user friendly
all common
easy
easily
fast
quickly
appropriate
adequate
etc.
and/or
some
several
flexible
as needed
as appropriate
efficient
intuitive
modern
robust
seamless
state-of-the-art
";

/// Vague terms that make a requirement ambiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    terms: Vec<String>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_LEXICON)
    }
}

impl Lexicon {
    /// One term per line; blank lines and `#` comments are skipped.
    pub fn parse(source: &str) -> Self {
        let mut terms: Vec<String> = Vec::new();
        for line in source.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let term = lang::words(line).join(" ");
            if !term.is_empty() && !terms.contains(&term) {
                terms.push(term);
            }
        }
        Self { terms }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        std::fs::read_to_string(path).map(|s| Self::parse(&s))
    }

    /// Normalised terms: lowercased words joined by single spaces.
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// First term occurring in a padded word string (see `lang::padded`).
    pub(crate) fn find_in(&self, padded: &str) -> Option<&str> {
        self.terms
            .iter()
            .find(|t| padded.contains(&format!(" {t} ")))
            .map(String::as_str)
    }
}

/// The fixed question asked for each unfulfilled characteristic.
pub fn question_template(characteristic: Characteristic) -> &'static str {
    match characteristic {
        Characteristic::Necessary => "What need or goal would be unmet without this requirement?",
        Characteristic::Appropriate => {
            "Is this requirement stated at the right level for the system it addresses?"
        }
        Characteristic::Unambiguous => {
            "Which terms in this requirement need a precise, single definition?"
        }
        Characteristic::Complete => {
            "Under what condition does this requirement apply, and what outcome is expected?"
        }
        Characteristic::Singular => {
            "Should this requirement be split into separate requirements, one per capability?"
        }
        Characteristic::Feasible => {
            "What constraint makes this requirement achievable within the project's means?"
        }
        Characteristic::Verifiable => {
            "What measurable criterion confirms this requirement is satisfied?"
        }
        Characteristic::Correct => "Which source confirms that this requirement is accurate?",
        Characteristic::Conforming => "Which approved pattern should this requirement follow?",
    }
}

/// Offline stand-in for every model role.
#[derive(Debug, Clone)]
pub struct HeuristicBackend {
    id: String,
    lexicon: Lexicon,
    patterns: Vec<RequirementPattern>,
}

impl Default for HeuristicBackend {
    fn default() -> Self {
        Self::new(Lexicon::default(), default_patterns())
    }
}

impl HeuristicBackend {
    pub fn new(lexicon: Lexicon, patterns: Vec<RequirementPattern>) -> Self {
        Self {
            id: "heuristic".into(),
            lexicon,
            patterns,
        }
    }

    pub fn with_id(mut self, id: &str) -> Self {
        self.id = id.to_string();
        self
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn patterns(&self) -> &[RequirementPattern] {
        &self.patterns
    }

    fn reply(&self, prompt: &str) -> Result<String, GatewayError> {
        let sections = PromptSections::parse(prompt);
        let instruction = sections.instruction.as_deref().unwrap_or("").trim();
        let input = sections.input.as_deref().unwrap_or("").trim();
        if instruction.starts_with(crate::evaluator::INSTRUCTION) {
            self.evaluation_table(input)
        } else if instruction.starts_with(crate::clarifier::INSTRUCTION_PREFIX) {
            Ok(question_table(instruction))
        } else if instruction.starts_with(crate::ragstore::INSTRUCTION) {
            Ok(grounded_answer(
                sections.context.as_deref().unwrap_or(""),
                input,
            ))
        } else if instruction.starts_with(crate::rewriter::INSTRUCTION) {
            self.rewrite_lines(input, sections.context.as_deref().unwrap_or(""))
        } else if instruction.starts_with(crate::rewriter::GENERIC_INSTRUCTION) {
            Ok(rewrite::generic_improvement(input))
        } else {
            let head: String = instruction.chars().take(80).collect();
            Err(GatewayError::UnsupportedTask(head))
        }
    }

    fn evaluation_table(&self, requirement: &str) -> Result<String, GatewayError> {
        let verdicts = heuristic_judge(requirement, &self.lexicon, &self.patterns)?;
        let rows = verdicts
            .iter()
            .map(|(c, v)| {
                vec![
                    c.name().to_string(),
                    v.detail.clone(),
                    if v.fulfilled { "Yes" } else { "No" }.to_string(),
                ]
            })
            .collect();
        let table = ParsedTable::new(
            crate::evaluator::TABLE_HEADER.iter().map(|s| s.to_string()).collect(),
            rows,
        )
        .expect("fixed arity");
        Ok(table.render())
    }

    fn rewrite_lines(&self, input: &str, context: &str) -> Result<String, GatewayError> {
        let (original, qa) = parse_rewrite_input(input);
        if original.trim().is_empty() {
            return Err(GatewayError::EmptyRequirement);
        }
        let mut patterns = parse_format_context(context);
        if patterns.is_empty() {
            patterns = self.patterns.clone();
        }
        Ok(rewrite::heuristic_rewrite(
            &original,
            &qa,
            &patterns,
            &self.lexicon,
        ))
    }
}

impl Backend for HeuristicBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, prompt: &str) -> Result<Completion, GatewayError> {
        if prompt.trim().is_empty() {
            return Err(GatewayError::EmptyPrompt);
        }
        let started = Instant::now();
        let text = self.reply(prompt)?;
        Ok(Completion {
            text,
            backend_id: self.id.clone(),
            latency: started.elapsed(),
            attempt: 1,
        })
    }
}

/// Characteristic names listed inside the quoted part of the instruction.
fn quoted_characteristics(instruction: &str) -> Vec<Characteristic> {
    let (Some(open), Some(close)) = (instruction.find('"'), instruction.rfind('"')) else {
        return Vec::new();
    };
    if close <= open {
        return Vec::new();
    }
    let mut seen = BTreeSet::new();
    instruction[open + 1..close]
        .replace(" and ", ",")
        .split(',')
        .filter_map(|name| name.trim().parse::<Characteristic>().ok())
        .filter(|c| seen.insert(*c))
        .collect()
}

fn question_table(instruction: &str) -> String {
    let rows = quoted_characteristics(instruction)
        .into_iter()
        .map(|c| vec![c.name().to_string(), question_template(c).to_string()])
        .collect();
    ParsedTable::new(
        crate::clarifier::TABLE_HEADER.iter().map(|s| s.to_string()).collect(),
        rows,
    )
    .expect("fixed arity")
    .render()
}

/// Sentences from the context that share at least two content words with
/// the question, in context order.
fn grounded_answer(context: &str, question: &str) -> String {
    let wanted = content_words(question);
    let mut picked: Vec<String> = Vec::new();
    for line in context.lines() {
        let line = line.trim();
        if line.starts_with("[chunk ") && line.ends_with(']') {
            continue;
        }
        for sentence in sentences(line) {
            let shared = content_words(&sentence).intersection(&wanted).count();
            if shared >= 2 && !picked.contains(&sentence) {
                picked.push(sentence);
            }
        }
    }
    if picked.is_empty() {
        NO_ANSWER.to_string()
    } else {
        picked.join(" ")
    }
}

/// Splits the rewrite input into the original text and its Q/A pairs.
fn parse_rewrite_input(input: &str) -> (String, Vec<(String, String)>) {
    let mut original = String::new();
    let mut qa: Vec<(String, String)> = Vec::new();
    let mut pending_question: Option<String> = None;
    for line in input.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("Requirement:") {
            original = rest.trim().trim_matches('"').to_string();
        } else if let Some((tag, text)) = numbered(line) {
            match tag {
                'Q' => pending_question = Some(text.to_string()),
                'A' => {
                    let q = pending_question.take().unwrap_or_default();
                    qa.push((q, text.to_string()));
                }
                _ => {}
            }
        }
    }
    (original, qa)
}

/// Parses "Q3- text" or "A3- text" into its tag letter and text.
fn numbered(line: &str) -> Option<(char, &str)> {
    let mut chars = line.char_indices();
    let (_, tag) = chars.next()?;
    if tag != 'Q' && tag != 'A' {
        return None;
    }
    let digits_end = line[1..].find(|c: char| !c.is_ascii_digit())? + 1;
    if digits_end == 1 {
        return None;
    }
    let rest = line[digits_end..].strip_prefix('-')?;
    Some((tag, rest.trim()))
}

/// Pattern lines "F1- template" from the rewrite context.
fn parse_format_context(context: &str) -> Vec<RequirementPattern> {
    context
        .lines()
        .filter_map(|line| {
            let (id, template) = line.trim().split_once("- ")?;
            if id.is_empty() || id.contains(char::is_whitespace) {
                return None;
            }
            RequirementPattern::new(id, template.trim()).ok()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::parse_table;

    #[test]
    fn lexicon_normalises_terms() {
        let lex = Lexicon::parse("# comment\n  Etc.\nUser-Friendly\n\netc\n");
        assert_eq!(lex.terms(), ["etc", "user-friendly"]);
        assert_eq!(lex.find_in(" a user-friendly ui "), Some("user-friendly"));
        assert_eq!(lex.find_in(" friendly "), None);
    }

    #[test]
    fn quoted_names_are_read_in_order() {
        let got = quoted_characteristics(
            "Define questions whose answers help to comply with the missing characteristics: \"Unambiguous, Complete and Verifiable\".",
        );
        assert_eq!(
            got,
            [Characteristic::Unambiguous, Characteristic::Complete, Characteristic::Verifiable]
        );
        let table = question_table(
            "Define questions whose answers help to comply with the missing characteristics: \"Verifiable\".",
        );
        let parsed = parse_table(&table, &["Feature Name", "Suggested Questions"]).unwrap();
        assert_eq!(
            parsed.rows(),
            [vec![
                "Verifiable".to_string(),
                "What measurable criterion confirms this requirement is satisfied?".to_string()
            ]]
        );
    }

    #[test]
    fn grounded_answer_needs_two_shared_words() {
        let context = "[chunk 3]\nReports shall be exported in PDF and CSV formats. Staff meet on Mondays.\n\n[chunk 9]\nNothing here.";
        let answer = grounded_answer(
            context,
            "What format should the generated list follow (e.g., PDF, CSV, on-screen display)?",
        );
        assert_eq!(answer, "Reports shall be exported in PDF and CSV formats.");
        assert_eq!(grounded_answer(context, "Who pays?"), NO_ANSWER);
    }

    #[test]
    fn rewrite_input_round_trip() {
        let (original, qa) = parse_rewrite_input(
            "Requirement: \"The system must work.\"\n\nQuestions and answers:\nQ1- Why?\nA1- Because.\nQ2- How?\nA2- Well.",
        );
        assert_eq!(original, "The system must work.");
        assert_eq!(
            qa,
            [
                ("Why?".to_string(), "Because.".to_string()),
                ("How?".to_string(), "Well.".to_string())
            ]
        );
        let formats = parse_format_context("Proposed formats:\nF1- The <entity> shall <action>.\n");
        assert_eq!(formats.len(), 1);
        assert_eq!(formats[0].id(), "F1");
    }

    #[test]
    fn unknown_task_is_rejected() {
        let err = HeuristicBackend::default()
            .complete("Instruction:\nWrite a poem.")
            .unwrap_err();
        assert!(matches!(err, GatewayError::UnsupportedTask(_)));
    }
}
