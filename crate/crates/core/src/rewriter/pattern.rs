//! Requirement sentence patterns with angle-bracket slots.
//!
//! Matching is surface syntax only: the non-blank literals between slots are
//! anchors that must appear in order, and the slots bind the spans between
//! them. Slots separated only by a space (such as `<action verb> <object>`)
//! form a run whose span is divided by word position and a small list of cue
//! words.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("pattern `{0}` has no slot")]
    NoSlot(String),
    #[error("pattern `{id}` has an unterminated slot")]
    Unterminated { id: String },
    #[error("pattern file line {line}: {message}")]
    File { line: usize, message: String },
    #[error("reading pattern file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Bundled patterns F1 and F2.
pub const DEFAULT_PATTERNS: &str = "\
F1
The <entity> shall <action verb> <object> <measurable outcome>.

F2
When <condition clause>, the <subject clause> shall <action verb clause> <object clause> <qualifying clause>.
";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Anchor {
    Literal(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementPattern {
    id: String,
    template: String,
    anchor_grammar: Vec<Anchor>,
}

impl RequirementPattern {
    pub fn new(id: impl Into<String>, template: impl Into<String>) -> Result<Self, PatternError> {
        let id = id.into();
        let template = template.into();
        let mut anchors = Vec::new();
        let mut rest = template.as_str();
        while let Some(open) = rest.find('<') {
            if open > 0 {
                anchors.push(Anchor::Literal(rest[..open].to_string()));
            }
            let close = rest[open..]
                .find('>')
                .ok_or_else(|| PatternError::Unterminated { id: id.clone() })?;
            anchors.push(Anchor::Slot(rest[open + 1..open + close].trim().to_string()));
            rest = &rest[open + close + 1..];
        }
        if !rest.is_empty() {
            anchors.push(Anchor::Literal(rest.to_string()));
        }
        if !anchors.iter().any(|a| matches!(a, Anchor::Slot(_))) {
            return Err(PatternError::NoSlot(id));
        }
        Ok(Self {
            id,
            template,
            anchor_grammar: anchors,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    pub fn anchor_grammar(&self) -> &[Anchor] {
        &self.anchor_grammar
    }

    pub fn slot_names(&self) -> impl Iterator<Item = &str> {
        self.anchor_grammar.iter().filter_map(|a| match a {
            Anchor::Slot(s) => Some(s.as_str()),
            Anchor::Literal(_) => None,
        })
    }

    /// Hard literals and slot runs, alternating.
    fn segments(&self) -> Vec<Segment<'_>> {
        let mut out: Vec<Segment<'_>> = Vec::new();
        for anchor in &self.anchor_grammar {
            match anchor {
                Anchor::Literal(l) if l.trim().is_empty() => {}
                Anchor::Literal(l) => out.push(Segment::Literal(l)),
                Anchor::Slot(s) => match out.last_mut() {
                    Some(Segment::Run(run)) => run.push(s),
                    _ => out.push(Segment::Run(vec![s])),
                },
            }
        }
        out
    }
}

impl fmt::Display for RequirementPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}- {}", self.id, self.template)
    }
}

enum Segment<'a> {
    Literal(&'a str),
    Run(Vec<&'a str>),
}

/// A successful match: slot name to bound text, in template order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternMatch {
    pub pattern_id: String,
    pub bindings: Vec<(String, String)>,
}

impl PatternMatch {
    pub fn slot(&self, name: &str) -> Option<&str> {
        self.bindings
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }
}

/// Words that usually open the trailing clause of a slot run.
const CUE_WORDS: &[&str] = &[
    "within", "in", "at", "by", "with", "that", "which", "for", "every", "before", "after",
    "providing", "including", "using", "to", "when", "if", "on", "from", "per", "no", "under",
    "according",
];

/// The text up to and including the first sentence terminator that is
/// followed by whitespace and an uppercase letter, or the whole text.
pub fn first_sentence(text: &str) -> &str {
    let text = text.trim();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    for (i, (offset, c)) in chars.iter().enumerate() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let mut j = i + 1;
        let mut saw_space = false;
        while j < chars.len() && chars[j].1.is_whitespace() {
            saw_space = true;
            j += 1;
        }
        if saw_space && j < chars.len() && chars[j].1.is_uppercase() {
            return &text[..offset + c.len_utf8()];
        }
    }
    text
}

fn split_run(span: &str, slots: &[&str]) -> Option<Vec<(String, String)>> {
    let span = span.trim();
    if span.is_empty() {
        return None;
    }
    if slots.len() == 1 {
        return Some(vec![(slots[0].to_string(), span.to_string())]);
    }
    let words: Vec<&str> = span.split_whitespace().collect();
    let m = slots.len();
    if words.len() < m {
        return None;
    }
    // first slot: one word; last slot: from the first cue word that leaves
    // room for the middle slots, else the final word; middle slots: one word
    // each, the first of them absorbing the remainder.
    let earliest_last = m - 1;
    let last_start = words
        .iter()
        .enumerate()
        .skip(earliest_last)
        .find(|(_, w)| CUE_WORDS.contains(&w.to_ascii_lowercase().as_str()))
        .map(|(i, _)| i)
        .unwrap_or(words.len() - 1);
    let mut bounds = vec![0, 1];
    let middle = m - 2;
    if middle > 0 {
        let first_middle_end = last_start - (middle - 1);
        bounds.push(first_middle_end);
        for k in 1..middle {
            bounds.push(first_middle_end + k);
        }
    }
    bounds.push(words.len());
    // bounds: [0, 1, ..., last_start, len]
    let mut out = Vec::with_capacity(m);
    for (k, slot) in slots.iter().enumerate() {
        let (a, b) = (bounds[k], bounds[k + 1]);
        if a >= b {
            return None;
        }
        out.push((slot.to_string(), words[a..b].join(" ")));
    }
    Some(out)
}

/// Matches the first sentence of `text` against `pattern`.
pub fn match_pattern(text: &str, pattern: &RequirementPattern) -> Option<PatternMatch> {
    let sentence = first_sentence(text);
    if sentence.is_empty() {
        return None;
    }
    let segments = pattern.segments();
    let mut bindings = Vec::new();
    let mut pos = 0;
    let mut pending_run: Option<&Vec<&str>> = None;
    for (i, segment) in segments.iter().enumerate() {
        match segment {
            Segment::Run(run) => pending_run = Some(run),
            Segment::Literal(lit) => {
                let at = if i == 0 {
                    if !sentence.starts_with(lit) {
                        return None;
                    }
                    0
                } else if i + 1 == segments.len() {
                    if !sentence.ends_with(lit) || sentence.len() < pos + lit.len() {
                        return None;
                    }
                    sentence.len() - lit.len()
                } else {
                    // the preceding run needs at least one character
                    let from = pos + usize::from(pending_run.is_some());
                    let from = next_boundary(sentence, from)?;
                    pos_of(sentence, from, lit)?
                };
                if let Some(run) = pending_run.take() {
                    bindings.extend(split_run(&sentence[pos..at], run)?);
                } else if at != pos {
                    return None;
                }
                pos = at + lit.len();
            }
        }
    }
    if let Some(run) = pending_run {
        bindings.extend(split_run(&sentence[pos..], run)?);
    } else if pos != sentence.len() {
        return None;
    }
    Some(PatternMatch {
        pattern_id: pattern.id.clone(),
        bindings,
    })
}

fn next_boundary(s: &str, mut i: usize) -> Option<usize> {
    if i > s.len() {
        return None;
    }
    while !s.is_char_boundary(i) {
        i += 1;
    }
    Some(i)
}

fn pos_of(s: &str, from: usize, lit: &str) -> Option<usize> {
    s[from..].find(lit).map(|p| p + from)
}

/// First pattern the text matches.
pub fn match_any<'a>(
    text: &str,
    patterns: &'a [RequirementPattern],
) -> Option<(&'a RequirementPattern, PatternMatch)> {
    patterns
        .iter()
        .find_map(|p| match_pattern(text, p).map(|m| (p, m)))
}

/// Parses a pattern file: blocks separated by blank lines, each an id line
/// followed by a template line. `#` starts a comment line.
pub fn parse_patterns(source: &str) -> Result<Vec<RequirementPattern>, PatternError> {
    let mut patterns = Vec::new();
    let mut block: Vec<(usize, &str)> = Vec::new();
    let mut finish = |block: &mut Vec<(usize, &str)>| -> Result<(), PatternError> {
        if block.is_empty() {
            return Ok(());
        }
        if block.len() != 2 {
            return Err(PatternError::File {
                line: block[0].0,
                message: "a pattern block is an id line followed by a template line".into(),
            });
        }
        patterns.push(RequirementPattern::new(block[0].1.trim(), block[1].1.trim())?);
        block.clear();
        Ok(())
    };
    for (n, line) in source.lines().enumerate() {
        if line.trim_start().starts_with('#') {
            continue;
        }
        if line.trim().is_empty() {
            finish(&mut block)?;
        } else {
            block.push((n + 1, line));
        }
    }
    finish(&mut block)?;
    Ok(patterns)
}

pub fn load_patterns(path: &Path) -> Result<Vec<RequirementPattern>, PatternError> {
    let source = fs::read_to_string(path).map_err(|source| PatternError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_patterns(&source)
}

pub fn default_patterns() -> Vec<RequirementPattern> {
    parse_patterns(DEFAULT_PATTERNS).expect("bundled patterns parse")
}
