//! Rule table for the offline characteristic judge.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;

use super::lang::{padded, words, MODALS, PRONOUNS, VERBS, WEAK_MODALS};
use super::Lexicon;
use crate::characteristic::{Characteristic, Verdict};
use crate::gateway::GatewayError;
use crate::rewriter::pattern::{match_any, RequirementPattern};

static NUMBER_WITH_UNIT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b\d+(?:[.,]\d+)?\s*(?:%|(?:ms|milliseconds?|s|secs?|seconds?|mins?|minutes?|h|hrs?|hours?|days?|weeks?|months?|years?|kb|mb|gb|tb|users?|requests?|transactions?|items?|records?|rows?|clicks?|steps?|versions?|pages?|characters?|times?|attempts?|products?|orders?|decimals?|digits?|languages?)\b)",
    )
    .expect("valid regex")
});

static WITHIN_QUANTITY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\bwithin\s+(?:\d+(?:[.,]\d+)?|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|fifteen|twenty|thirty|forty|fifty|sixty|ninety|a|an)\s+\w+",
    )
    .expect("valid regex")
});

const FORMAT_NAMES: &str = "pdf|csv|xml|json|html|xlsx|xls|txt|docx|odt|ods|png|jpe?g|svg|rtf";

static FORMAT_LIST: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"(?i)\b(?:{f})(?:\s*(?:,|and|or|,\s*and|,\s*or)\s*(?:{f}))*\s+(?:file\s+)?formats?\b",
        f = FORMAT_NAMES
    ))
    .expect("valid regex")
});

const INFEASIBLE: &[&str] = &[
    "100% availability",
    "100% uptime",
    "zero downtime",
    "never fail",
    "never fails",
    "instantaneous",
    "instantaneously",
    "instantly",
    "infinite",
    "unlimited",
];

fn measurable_evidence(text: &str) -> Option<String> {
    [&*WITHIN_QUANTITY, &*NUMBER_WITH_UNIT, &*FORMAT_LIST]
        .into_iter()
        .find_map(|re| re.find(text))
        .map(|m| m.as_str().to_string())
}

/// Index of the first "and"/"or" that joins two verb phrases.
pub(crate) fn clause_conjunction(tokens: &[String]) -> Option<usize> {
    let first_modal = tokens.iter().position(|t| MODALS.contains(&t.as_str()));
    tokens.iter().enumerate().find_map(|(i, t)| {
        if t != "and" && t != "or" {
            return None;
        }
        if first_modal.is_some_and(|m| i < m) {
            return None;
        }
        let next = tokens[i + 1..]
            .iter()
            .find(|n| *n != "also" && *n != "then")?;
        (VERBS.contains(&next.as_str()) || MODALS.contains(&next.as_str())).then_some(i)
    })
}

fn has_object_after_verb(tokens: &[String]) -> bool {
    let Some(modal) = tokens.iter().position(|t| MODALS.contains(&t.as_str())) else {
        return false;
    };
    let mut rest = &tokens[modal + 1..];
    if rest.len() >= 3 && rest[0] == "be" && rest[1] == "able" && rest[2] == "to" {
        rest = &rest[3..];
    }
    rest.len() >= 2
}

/// Applies the fixed rule table to a requirement text.
pub fn heuristic_judge(
    text: &str,
    lexicon: &Lexicon,
    patterns: &[RequirementPattern],
) -> Result<BTreeMap<Characteristic, Verdict>, GatewayError> {
    if text.trim().is_empty() {
        return Err(GatewayError::EmptyRequirement);
    }
    let tokens = words(text);
    let joined = padded(&tokens);
    let mut verdicts = BTreeMap::new();

    let vague = lexicon.find_in(&joined);
    let pronoun = tokens.iter().find(|t| PRONOUNS.contains(&t.as_str()));
    let weak = tokens.iter().find(|t| WEAK_MODALS.contains(&t.as_str()));
    let has_shall = tokens.iter().any(|t| t == "shall");
    let unambiguous = match (vague, pronoun, weak, has_shall) {
        (Some(term), ..) => Verdict::new(false, format!("vague term \"{term}\"")),
        (None, Some(p), ..) => Verdict::new(false, format!("pronoun \"{p}\" has no explicit referent")),
        (None, None, Some(m), _) => Verdict::new(false, format!("obligation stated with \"{m}\" instead of \"shall\"")),
        (None, None, None, false) => Verdict::new(false, "no binding \"shall\" statement"),
        (None, None, None, true) => Verdict::new(true, "single reading; binding \"shall\" statement"),
    };
    verdicts.insert(Characteristic::Unambiguous, unambiguous);

    let singular = match clause_conjunction(&tokens) {
        Some(i) => Verdict::new(
            false,
            format!("\"{}\" joins two verb phrases", tokens[i]),
        ),
        None => Verdict::new(true, "one verb phrase"),
    };
    verdicts.insert(Characteristic::Singular, singular);

    let evidence = measurable_evidence(text);
    let verifiable = match &evidence {
        Some(e) => Verdict::new(true, format!("measurable criterion \"{e}\"")),
        None => Verdict::new(false, "no quantity, format list or time bound to test against"),
    };
    let is_verifiable = verifiable.fulfilled;
    verdicts.insert(Characteristic::Verifiable, verifiable);

    let complete = if !is_verifiable {
        Verdict::new(false, "the expected outcome is not stated")
    } else if !has_object_after_verb(&tokens) {
        Verdict::new(false, "no object or outcome follows the verb")
    } else {
        Verdict::new(true, "actor, action and outcome are stated")
    };
    verdicts.insert(Characteristic::Complete, complete);

    let conforming = match match_any(text, patterns) {
        Some((p, _)) => Verdict::new(true, format!("follows pattern {}", p.id())),
        None => Verdict::new(false, "matches no configured pattern"),
    };
    verdicts.insert(Characteristic::Conforming, conforming);

    let feasible = match INFEASIBLE.iter().find(|t| joined.contains(&format!(" {t} "))
        || text.to_lowercase().contains(*t))
    {
        Some(t) => Verdict::new(false, format!("\"{t}\" is not achievable")),
        None => Verdict::new(true, "no infeasible absolute"),
    };
    verdicts.insert(Characteristic::Feasible, feasible);

    for (c, detail) in [
        (Characteristic::Necessary, "no rule contradicts necessity"),
        (Characteristic::Appropriate, "no rule contradicts its level"),
        (Characteristic::Correct, "no rule contradicts correctness"),
    ] {
        verdicts.insert(c, Verdict::new(true, detail));
    }
    Ok(verdicts)
}
