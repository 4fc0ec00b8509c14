//! Deterministic rewriting used by the offline backend.
//!
//! The original requirement is decomposed into an optional condition, a
//! subject, a modal and a predicate. The rewrite restates it with "shall",
//! resolves pronouns against the subject and object, drops lexicon terms,
//! and appends answered facts as qualifying sentences in exchange order. A
//! compound predicate is split when a split question was answered
//! affirmatively.

use super::lang::{
    capitalize, fix_articles, map_words, MODALS, STOPWORDS, VERBS, WEAK_MODALS,
};
use super::Lexicon;
use crate::rewriter::pattern::RequirementPattern;

const DETERMINERS: &[&str] = &["a", "an", "the", "each", "every", "any"];
const PHRASE_BREAKS: &[&str] = &[
    "if", "when", "to", "in", "on", "at", "by", "for", "with", "and", "or", "from", "that",
    "which", "within", "after", "before",
];
const CONDITION_MARKERS: &[&str] = &["if", "when", "once", "whenever"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Clause {
    pub condition: Option<String>,
    /// Subject noun phrase without its determiner, e.g. "inventory manager".
    pub noun: String,
    pub modal: String,
    pub predicate: String,
}

fn bare(token: &str) -> String {
    token
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

fn strip_terminal(s: &str) -> &str {
    s.trim().trim_end_matches(['.', '!', ';', ',']).trim()
}

pub(crate) fn decompose(text: &str) -> Option<Clause> {
    let mut body = strip_terminal(text).to_string();
    let mut condition = None;

    let lowered = body.to_lowercase();
    for marker in ["when ", "if "] {
        if lowered.starts_with(marker) {
            if let Some(comma) = body.find(',') {
                condition = Some(body[marker.len()..comma].trim().to_string());
                body = body[comma + 1..].trim().to_string();
            }
            break;
        }
    }

    let tokens: Vec<&str> = body.split_whitespace().collect();
    let modal_at = tokens.iter().position(|t| MODALS.contains(&bare(t).as_str()))?;
    if modal_at == 0 || modal_at + 1 >= tokens.len() {
        return None;
    }
    let mut subject: Vec<&str> = tokens[..modal_at].to_vec();
    if DETERMINERS.contains(&bare(subject[0]).as_str()) {
        subject.remove(0);
    }
    if subject.is_empty() {
        return None;
    }
    let noun = decapitalize_first(&subject.join(" "));
    let modal = bare(tokens[modal_at]);
    let mut predicate_tokens: Vec<&str> = tokens[modal_at + 1..].to_vec();

    if condition.is_none() {
        if let Some(at) = predicate_tokens
            .iter()
            .position(|t| CONDITION_MARKERS.contains(&bare(t).as_str()))
            .filter(|at| *at > 0 && *at + 1 < predicate_tokens.len())
        {
            condition = Some(predicate_tokens[at + 1..].join(" "));
            predicate_tokens.truncate(at);
        }
    }
    let mut predicate = predicate_tokens.join(" ");
    predicate = predicate.trim_end_matches(',').to_string();
    if matches!(modal.as_str(), "can" | "may" | "could" | "might") {
        predicate = format!("be able to {predicate}");
    }
    Some(Clause {
        condition,
        noun,
        modal,
        predicate,
    })
}

fn decapitalize_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        // keep acronyms such as "ERP system"
        Some(_) if chars.clone().next().is_some_and(|n| n.is_uppercase()) => s.to_string(),
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// First noun phrase after the verb, with "the" as determiner.
fn object_phrase(predicate: &str) -> Option<String> {
    let tokens: Vec<&str> = predicate.split_whitespace().collect();
    let start = if tokens.len() > 3 && tokens[0] == "be" && tokens[1] == "able" && tokens[2] == "to" {
        4
    } else {
        1
    };
    let mut phrase = Vec::new();
    for token in tokens.iter().skip(start) {
        let b = bare(token);
        if PHRASE_BREAKS.contains(&b.as_str()) {
            break;
        }
        phrase.push(token.trim_matches(|c: char| !c.is_alphanumeric() && c != '-'));
        if token.ends_with([',', '.', ';']) {
            break;
        }
    }
    if phrase.is_empty() {
        return None;
    }
    if DETERMINERS.contains(&bare(phrase[0]).as_str()) {
        phrase.remove(0);
    }
    (!phrase.is_empty()).then(|| format!("the {}", phrase.join(" ")))
}

fn resolve_pronouns(text: &str, subject: &str, object: Option<&str>) -> String {
    map_words(text, |w| match w {
        "he" | "she" | "they" | "him" | "her" | "them" => Some(subject.to_string()),
        "it" => object.map(str::to_string),
        _ => None,
    })
}

/// Removes every lexicon term, then tidies articles and punctuation.
pub(crate) fn strip_vague(text: &str, lexicon: &Lexicon) -> String {
    let mut tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    for term in lexicon.terms() {
        let parts: Vec<&str> = term.split(' ').collect();
        let mut i = 0;
        while i + parts.len() <= tokens.len() {
            let hit = parts
                .iter()
                .enumerate()
                .all(|(k, p)| bare(&tokens[i + k]) == *p);
            if hit {
                let last = &tokens[i + parts.len() - 1];
                let trailing: String = last
                    .chars()
                    .rev()
                    .take_while(|c| !c.is_alphanumeric())
                    .collect::<Vec<_>>()
                    .into_iter()
                    .rev()
                    .collect();
                tokens.drain(i..i + parts.len());
                // "support all common browsers" keeps a determiner
                let needs_article = i > 0
                    && trailing.is_empty()
                    && !DETERMINERS.contains(&bare(&tokens[i - 1]).as_str())
                    && tokens.get(i).is_some_and(|next| {
                        let b = bare(next);
                        !b.is_empty() && !PHRASE_BREAKS.contains(&b.as_str()) && !STOPWORDS.contains(&b.as_str())
                    });
                if needs_article {
                    tokens.insert(i, "the".to_string());
                    i += 1;
                }
                if !trailing.is_empty() && i > 0 {
                    let prev = tokens[i - 1].trim_end_matches(',').to_string();
                    tokens[i - 1] = prev + &trailing;
                }
            } else {
                i += 1;
            }
        }
    }
    let joined = tokens.join(" ");
    let tidy = joined
        .replace(" ,", ",")
        .replace(",,", ",")
        .replace(", .", ".")
        .replace(",.", ".");
    fix_articles(tidy.trim().trim_end_matches(','))
}

fn normalize_answer(answer: &str) -> String {
    let shall = map_words(answer.trim(), |w| {
        WEAK_MODALS.contains(&w).then(|| "shall".to_string())
    });
    let mut s = capitalize(shall.trim());
    if !s.ends_with(['.', '!', '?']) {
        s.push('.');
    }
    s
}

/// An answer consisting of a single "When ..."/"If ..." clause with no
/// main clause of its own, read as the triggering condition.
fn condition_clause(answer: &str) -> Option<String> {
    let a = strip_terminal(answer);
    let lowered = a.to_lowercase();
    let rest = ["when ", "if ", "once "]
        .iter()
        .find_map(|m| lowered.starts_with(m).then(|| &a[m.len()..]))?;
    let nested = rest.contains(',') || rest.contains(['.', ';', '!', '?']);
    (!nested && !rest.trim().is_empty()).then(|| rest.trim().to_string())
}

fn is_split_question(question: &str) -> bool {
    let q = question.to_lowercase();
    q.contains("split") || q.contains("separate")
}

fn is_affirmative(answer: &str) -> bool {
    let first = answer
        .split(|c: char| !c.is_alphanumeric() && c != 'í')
        .find(|w| !w.is_empty())
        .unwrap_or("")
        .to_lowercase();
    matches!(
        first.as_str(),
        "yes" | "y" | "sí" | "si" | "affirmative" | "agreed" | "correct" | "ok" | "okay"
    )
}

fn is_negative(answer: &str) -> bool {
    let a = answer.trim().to_lowercase();
    matches!(a.as_str(), "no" | "no." | "none" | "none." | "n/a" | "not applicable")
        || a.starts_with("no,")
        || a.starts_with("no.")
}

/// Splits a predicate at its first clause-level conjunction.
fn split_predicate(predicate: &str) -> Option<(String, String)> {
    let tokens: Vec<&str> = predicate.split_whitespace().collect();
    for (i, t) in tokens.iter().enumerate() {
        let b = bare(t);
        if b != "and" && b != "or" {
            continue;
        }
        let mut j = i + 1;
        while j < tokens.len() && matches!(bare(tokens[j]).as_str(), "also" | "then") {
            j += 1;
        }
        let Some(next) = tokens.get(j) else { break };
        let nb = bare(next);
        let right_start = if MODALS.contains(&nb.as_str()) {
            j + 1
        } else if VERBS.contains(&nb.as_str()) {
            j
        } else {
            continue;
        };
        if i == 0 || right_start >= tokens.len() {
            continue;
        }
        let left = tokens[..i].join(" ").trim_end_matches(',').to_string();
        let right = tokens[right_start..].join(" ");
        return Some((left, right));
    }
    None
}

#[derive(Clone, Copy)]
enum Shape {
    LeadingSubject,
    LeadingCondition,
}

fn shape_of(pattern: &RequirementPattern) -> Option<Shape> {
    let t = pattern.template();
    if t.starts_with("The <") {
        Some(Shape::LeadingSubject)
    } else if t.starts_with("When <") {
        Some(Shape::LeadingCondition)
    } else {
        None
    }
}

fn sentence(shape: Shape, noun: &str, predicate: &str, condition: Option<&str>) -> String {
    match (shape, condition) {
        (Shape::LeadingCondition, Some(c)) => format!("When {c}, the {noun} shall {predicate}."),
        (_, Some(c)) => format!("The {noun} shall {predicate} when {c}."),
        (_, None) => format!("The {noun} shall {predicate}."),
    }
}

/// Produces the line-protocol reply (`ID: requirement` per line).
pub(crate) fn heuristic_rewrite(
    original: &str,
    qa: &[(String, String)],
    patterns: &[RequirementPattern],
    lexicon: &Lexicon,
) -> String {
    let fallback_id = patterns.first().map_or("F1", |p| p.id());
    let Some(clause) = decompose(original) else {
        return format!("{fallback_id}: {}", original.trim());
    };

    let subject_ref = format!("the {}", clause.noun);
    let object_ref = object_phrase(&clause.predicate);
    let tidy = |s: &str| {
        let resolved = resolve_pronouns(s, &subject_ref, object_ref.as_deref());
        strip_vague(&resolved, lexicon)
    };
    let predicate = tidy(&clause.predicate);
    // an answered condition replaces the one stated inline
    let condition_answer = qa.iter().position(|(_, a)| condition_clause(a).is_some());
    let condition = match condition_answer.and_then(|i| condition_clause(&qa[i].1)) {
        Some(answered) => Some(tidy(&answered)),
        None => clause.condition.as_deref().map(tidy),
    };

    let leading_condition = patterns
        .iter()
        .find(|p| matches!(shape_of(p), Some(Shape::LeadingCondition)));
    let leading_subject = patterns
        .iter()
        .find(|p| matches!(shape_of(p), Some(Shape::LeadingSubject)));
    let (pattern_id, shape) = match (&condition, leading_condition, leading_subject) {
        (Some(_), Some(p), _) => (p.id(), Shape::LeadingCondition),
        (_, _, Some(p)) => (p.id(), Shape::LeadingSubject),
        (_, Some(p), None) => (p.id(), Shape::LeadingCondition),
        (_, None, None) => (fallback_id, Shape::LeadingSubject),
    };

    let split_requested = qa
        .iter()
        .any(|(q, a)| is_split_question(q) && is_affirmative(a));
    if split_requested {
        if let Some((left, right)) = split_predicate(&predicate) {
            return [left, right]
                .iter()
                .map(|part| {
                    format!(
                        "{pattern_id}: {}",
                        sentence(shape, &clause.noun, part, condition.as_deref())
                    )
                })
                .collect::<Vec<_>>()
                .join("\n");
        }
    }

    let mut text = sentence(shape, &clause.noun, &predicate, condition.as_deref());
    let mut appended = Vec::new();
    for (i, (question, answer)) in qa.iter().enumerate() {
        if Some(i) == condition_answer
            || is_split_question(question)
            || is_negative(answer)
            || answer.trim().is_empty()
        {
            continue;
        }
        let fact = normalize_answer(answer);
        if !appended.contains(&fact) {
            text.push(' ');
            text.push_str(&fact);
            appended.push(fact);
        }
    }
    format!("{pattern_id}: {text}")
}

/// Reply to the generic "how can this be improved" prompt: restates the
/// requirement with "shall" and nothing else.
pub(crate) fn generic_improvement(original: &str) -> String {
    let mut replaced = false;
    let improved = map_words(original.trim(), |w| {
        if !replaced && MODALS.contains(&w) {
            replaced = true;
            Some("shall".to_string())
        } else {
            None
        }
    });
    format!("Improved Requirement: {improved}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewriter::pattern::{default_patterns, match_pattern};

    const R1: &str = "The system must allow the inventory manager to generate a list of missing products.";
    const R2: &str = "The system will have a user-friendly interface and support all common browsers.";
    const R3: &str = "A customer can cancel an order if he has not yet received it.";

    #[test]
    fn decomposes_originals() {
        let c = decompose(R1).unwrap();
        assert_eq!(c.noun, "system");
        assert_eq!(c.modal, "must");
        assert_eq!(c.predicate, "allow the inventory manager to generate a list of missing products");
        let c = decompose(R3).unwrap();
        assert_eq!(c.noun, "customer");
        assert_eq!(c.condition.as_deref(), Some("he has not yet received it"));
        assert_eq!(c.predicate, "be able to cancel an order");
        assert!(decompose("Customers like nice interfaces.").is_none());
    }

    #[test]
    fn r1_rewrite_appends_answers() {
        let qa = vec![(
            "What format should the generated list follow (e.g., PDF, CSV, on-screen display)?".to_string(),
            "The list should be available in PDF and CSV formats, as well as an on-screen display for quick review.".to_string(),
        )];
        let out = heuristic_rewrite(R1, &qa, &default_patterns(), &Lexicon::default());
        assert_eq!(
            out,
            "F1: The system shall allow the inventory manager to generate a list of missing products. The list shall be available in PDF and CSV formats, as well as an on-screen display for quick review."
        );
        let text = out.strip_prefix("F1: ").unwrap();
        assert!(match_pattern(text, &default_patterns()[0]).is_some());
    }

    #[test]
    fn repeated_answers_are_appended_once() {
        let qa = vec![
            ("Q1?".to_string(), "Reports load within 2 seconds".to_string()),
            ("Q2?".to_string(), "Reports load within 2 seconds.".to_string()),
        ];
        let out = heuristic_rewrite(R1, &qa, &default_patterns(), &Lexicon::default());
        assert_eq!(out.matches("within 2 seconds").count(), 1);
    }

    #[test]
    fn condition_answer_selects_triggered_pattern() {
        let qa = vec![
            (
                "Under what condition does this requirement apply?".to_string(),
                "When the inventory manager or authorized personnel request a missing products list.".to_string(),
            ),
            (
                "What format should the generated list follow?".to_string(),
                "The list should be available in PDF and CSV formats.".to_string(),
            ),
        ];
        let out = heuristic_rewrite(R1, &qa, &default_patterns(), &Lexicon::default());
        assert_eq!(
            out,
            "F2: When the inventory manager or authorized personnel request a missing products list, the system shall allow the inventory manager to generate a list of missing products. The list shall be available in PDF and CSV formats."
        );
        let text = out.strip_prefix("F2: ").unwrap();
        let m = match_pattern(text, &default_patterns()[1]).unwrap();
        assert_eq!(
            m.slot("condition clause"),
            Some("the inventory manager or authorized personnel request a missing products list")
        );
    }

    #[test]
    fn r2_splits_on_affirmative_answer() {
        let qa = vec![(
            "Should this requirement be split into separate requirements, one per capability?".to_string(),
            "Yes, one for the interface and one for browser support.".to_string(),
        )];
        let out = heuristic_rewrite(R2, &qa, &default_patterns(), &Lexicon::default());
        assert_eq!(
            out,
            "F1: The system shall have an interface.\nF1: The system shall support the browsers."
        );
    }

    #[test]
    fn r3_uses_condition_pattern_and_resolves_pronouns() {
        let out = heuristic_rewrite(R3, &[], &default_patterns(), &Lexicon::default());
        assert_eq!(
            out,
            "F2: When the customer has not yet received the order, the customer shall be able to cancel an order."
        );
        let text = out.strip_prefix("F2: ").unwrap();
        assert!(match_pattern(text, &default_patterns()[1]).is_some());
    }

    #[test]
    fn vague_terms_are_dropped() {
        let lex = Lexicon::default();
        assert_eq!(
            strip_vague("support all common browsers, etc.", &lex),
            "support the browsers."
        );
        assert_eq!(strip_vague("have a user-friendly interface", &lex), "have an interface");
    }

    #[test]
    fn generic_prompt_only_fixes_modal() {
        assert_eq!(
            generic_improvement(R2),
            "Improved Requirement: The system shall have a user-friendly interface and support all common browsers."
        );
    }

    #[test]
    fn answer_polarity() {
        assert!(is_affirmative("Yes, split it."));
        assert!(!is_affirmative("No need"));
        assert!(is_negative("No."));
        assert!(!is_negative("No more than 5 seconds."));
    }
}
