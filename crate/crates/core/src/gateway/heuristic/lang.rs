//! Word-level helpers shared by the heuristic rules.

pub(crate) const MODALS: &[&str] = &[
    "shall", "must", "will", "should", "can", "may", "could", "might", "would",
];

pub(crate) const WEAK_MODALS: &[&str] = &["must", "will", "should", "can", "may", "could", "might"];

pub(crate) const PRONOUNS: &[&str] = &["he", "she", "it", "they", "him", "her", "them"];

/// Base-form verbs that, after "and"/"or", start a second verb phrase.
/// Words that are commonly nouns in requirements (list, report, display)
/// are left out.
pub(crate) const VERBS: &[&str] = &[
    "accept", "add", "allow", "alert", "archive", "authenticate", "authorize", "back", "be",
    "calculate", "cancel", "change", "check", "compute", "confirm", "connect", "create", "delete",
    "deliver", "deny", "download", "edit", "enable", "encrypt", "ensure", "export", "filter",
    "generate", "handle", "have", "hide", "import", "include", "integrate", "keep", "load",
    "maintain", "manage", "monitor", "notify", "offer", "permit", "prevent", "print", "process",
    "produce", "protect", "provide", "publish", "read", "receive", "refund", "reject", "remove",
    "reset", "restore", "retrieve", "run", "save", "search", "select", "send", "share", "show",
    "sort", "store", "submit", "support", "sync", "track", "update", "upload", "validate",
    "verify", "view", "work", "write",
];

pub(crate) const STOPWORDS: &[&str] = &[
    "the", "and", "for", "are", "but", "not", "you", "all", "any", "can", "her", "was", "one",
    "our", "out", "has", "have", "had", "his", "how", "its", "may", "who", "did", "get", "use",
    "what", "which", "when", "where", "why", "with", "this", "that", "these", "those", "from",
    "into", "should", "shall", "will", "would", "could", "must", "does", "been", "being", "than",
    "then", "them", "they", "there", "their", "such", "each", "other", "some", "more", "most",
    "also", "very", "just", "only", "about", "over", "under", "between", "system",
];

/// Lowercased word tokens with surrounding punctuation removed.
pub(crate) fn words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

/// Word tokens joined by single spaces and padded, so that
/// `contains(" term ")` is a whole-word test.
pub(crate) fn padded(words: &[String]) -> String {
    format!(" {} ", words.join(" "))
}

pub(crate) fn is_content_word(w: &str) -> bool {
    w.chars().count() >= 3 && !STOPWORDS.contains(&w)
}

/// Alphanumeric-only tokens, used for content-word overlap.
pub(crate) fn content_words(text: &str) -> std::collections::BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .map(str::to_lowercase)
        .filter(|w| is_content_word(w))
        .collect()
}

/// Splits prose into sentences at `.`, `!` or `?` followed by whitespace.
pub(crate) fn sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|n| n.is_whitespace()) {
            let s = current.trim();
            if !s.is_empty() {
                out.push(s.to_string());
            }
            current.clear();
        }
    }
    let s = current.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
    out
}

pub(crate) fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Replaces the words of `text` one by one, keeping surrounding
/// punctuation, via `f(lowercased_word) -> Option<replacement>`.
pub(crate) fn map_words(text: &str, mut f: impl FnMut(&str) -> Option<String>) -> String {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let start = raw.find(|c: char| c.is_alphanumeric());
        let end = raw.rfind(|c: char| c.is_alphanumeric());
        let (Some(start), Some(end)) = (start, end) else {
            out.push(raw.to_string());
            continue;
        };
        let end = end + raw[end..].chars().next().map_or(1, char::len_utf8);
        let core = &raw[start..end];
        match f(&core.to_lowercase()) {
            Some(replacement) => {
                out.push(format!("{}{}{}", &raw[..start], replacement, &raw[end..]))
            }
            None => out.push(raw.to_string()),
        }
    }
    out.join(" ")
}

/// Fixes "a" before a vowel-initial word and "an" before a consonant one.
pub(crate) fn fix_articles(text: &str) -> String {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut out: Vec<String> = Vec::with_capacity(tokens.len());
    for (i, token) in tokens.iter().enumerate() {
        let next_vowel = tokens
            .get(i + 1)
            .and_then(|n| n.chars().next())
            .map(|c| "aeiouAEIOU".contains(c));
        let fixed = match (*token, next_vowel) {
            ("a", Some(true)) => "an",
            ("A", Some(true)) => "An",
            ("an", Some(false)) => "a",
            ("An", Some(false)) => "A",
            (t, _) => t,
        };
        out.push(fixed.to_string());
    }
    out.join(" ")
}
