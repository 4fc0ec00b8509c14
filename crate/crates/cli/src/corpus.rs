//! Variant comparison over a corpus of requirements.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use reqrefine::evaluator::evaluate;
use reqrefine::gateway::Backend;
use reqrefine::{
    aggregate_quality, compute_quality, AggregateScore, Characteristic, CharacteristicReport,
    QualityScore, Requirement, RequirementId,
};

/// Label of the original text of an entry.
pub const ORIGINAL: &str = "RO";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("entry {0} has variants but no {ORIGINAL}")]
    MissingOriginal(String),
}

fn line_error(line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Line {
        line,
        message: message.into(),
    }
}

/// One requirement and, for comparison runs, its alternative texts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusEntry {
    pub id: String,
    pub text: String,
    /// Variant label to text, in file order. Repeated labels get `.1`,
    /// `.2` suffixes.
    pub variants: Vec<(String, String)>,
}

/// The part of a column label before any `.n` suffix.
pub fn origin_of(label: &str) -> &str {
    label.split_once('.').map_or(label, |(base, _)| base)
}

fn label_duplicates<T>(rows: &mut [(String, T)]) {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for (label, _) in rows.iter() {
        *counts.entry(label.clone()).or_default() += 1;
    }
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (label, _) in rows.iter_mut() {
        if counts[label.as_str()] > 1 {
            let n = seen.entry(label.clone()).or_default();
            *n += 1;
            *label = format!("{label}.{n}");
        }
    }
}

fn data_lines(source: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    source
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| (i + 1, l.split('\t').map(str::trim).collect()))
}

/// Reads `id<TAB>variant<TAB>text` or `id<TAB>text` lines; `#` starts a
/// comment line.
pub fn parse_corpus(source: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut order: Vec<String> = Vec::new();
    let mut rows: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    for (line, cells) in data_lines(source) {
        let (id, variant, text) = match cells.as_slice() {
            [id, text] => (*id, ORIGINAL, *text),
            [id, variant, text] => (*id, *variant, *text),
            other => {
                return Err(line_error(line, format!("expected 2 or 3 columns, found {}", other.len())))
            }
        };
        if id.is_empty() || variant.is_empty() || text.is_empty() {
            return Err(line_error(line, "empty cell"));
        }
        if !rows.contains_key(id) {
            order.push(id.to_string());
        }
        rows.entry(id.to_string())
            .or_default()
            .push((variant.to_string(), text.to_string()));
    }
    order
        .into_iter()
        .map(|id| {
            let mut variants = rows.remove(&id).unwrap_or_default();
            let text = variants
                .iter()
                .find(|(v, _)| v == ORIGINAL)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| CorpusError::MissingOriginal(id.clone()))?;
            label_duplicates(&mut variants);
            Ok(CorpusEntry { id, text, variants })
        })
        .collect()
}

/// A precomputed verdict vector for one variant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerdictRow {
    pub entry: String,
    pub variant: String,
    pub fulfilled: BTreeMap<Characteristic, bool>,
}

fn parse_flag(cell: &str) -> Option<bool> {
    match cell.to_ascii_lowercase().as_str() {
        "yes" | "y" | "true" | "1" => Some(true),
        "no" | "n" | "false" | "0" => Some(false),
        _ => None,
    }
}

/// Reads a verdict file: a header `requirement variant <characteristic>...`
/// followed by one yes/no row per variant.
pub fn parse_verdicts(source: &str) -> Result<Vec<VerdictRow>, CorpusError> {
    let mut lines = data_lines(source);
    let Some((header_line, header)) = lines.next() else {
        return Ok(Vec::new());
    };
    if header.len() < 3 {
        return Err(line_error(header_line, "header needs requirement, variant and characteristics"));
    }
    let mut columns = Vec::new();
    for name in &header[2..] {
        let c: Characteristic = name
            .parse()
            .map_err(|_| line_error(header_line, format!("unknown characteristic `{name}`")))?;
        if columns.contains(&c) {
            return Err(line_error(header_line, format!("{c} appears twice")));
        }
        columns.push(c);
    }
    let mut out = Vec::new();
    for (line, cells) in lines {
        if cells.len() != header.len() {
            return Err(line_error(
                line,
                format!("expected {} columns, found {}", header.len(), cells.len()),
            ));
        }
        let mut fulfilled = BTreeMap::new();
        for (c, cell) in columns.iter().zip(&cells[2..]) {
            let flag = parse_flag(cell)
                .ok_or_else(|| line_error(line, format!("`{cell}` is not yes or no")))?;
            fulfilled.insert(*c, flag);
        }
        out.push(VerdictRow {
            entry: cells[0].to_string(),
            variant: cells[1].to_string(),
            fulfilled,
        });
    }
    let mut by_entry: Vec<(String, Vec<(String, VerdictRow)>)> = Vec::new();
    for row in out {
        match by_entry.iter_mut().find(|(id, _)| *id == row.entry) {
            Some((_, rows)) => rows.push((row.variant.clone(), row)),
            None => by_entry.push((row.entry.clone(), vec![(row.variant.clone(), row)])),
        }
    }
    Ok(by_entry
        .into_iter()
        .flat_map(|(_, mut rows)| {
            label_duplicates(&mut rows);
            rows.into_iter().map(|(label, row)| VerdictRow { variant: label, ..row })
        })
        .collect())
}

/// One evaluated variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnResult {
    pub entry: String,
    pub variant: String,
    pub verdicts: BTreeMap<Characteristic, bool>,
    pub score: Option<QualityScore>,
    pub error: Option<String>,
}

impl ColumnResult {
    fn heading(&self) -> String {
        format!("{} {}", self.entry, self.variant)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub assessed: Vec<Characteristic>,
    pub columns: Vec<ColumnResult>,
    /// Mean score per variant origin (`RO`, `RG`, `RM`, ...).
    pub means: BTreeMap<String, AggregateScore>,
}

fn report_from_flags(
    row: &VerdictRow,
    standard_configured: bool,
) -> Result<CharacteristicReport, String> {
    let assessed = Characteristic::assessed_set(standard_configured);
    let mut flags = [false; 9];
    for (i, c) in Characteristic::ALL.into_iter().enumerate() {
        match row.fulfilled.get(&c) {
            Some(f) => flags[i] = *f,
            None if assessed.contains(&c) => return Err(format!("no verdict for {c}")),
            None => {}
        }
    }
    Ok(CharacteristicReport::from_flags(
        RequirementId::new(&row.entry),
        flags,
        standard_configured,
        "verdict-file",
    ))
}

fn column(entry: &str, variant: &str, result: Result<CharacteristicReport, String>) -> ColumnResult {
    match result {
        Ok(report) => ColumnResult {
            entry: entry.to_string(),
            variant: variant.to_string(),
            verdicts: report
                .assessed()
                .iter()
                .map(|c| (*c, report.is_fulfilled(*c)))
                .collect(),
            score: Some(compute_quality(&report)),
            error: None,
        },
        Err(error) => ColumnResult {
            entry: entry.to_string(),
            variant: variant.to_string(),
            verdicts: BTreeMap::new(),
            score: None,
            error: Some(error),
        },
    }
}

fn assemble(columns: Vec<ColumnResult>, standard_configured: bool) -> CorpusReport {
    let mut by_origin: BTreeMap<String, Vec<QualityScore>> = BTreeMap::new();
    for c in &columns {
        if let Some(score) = c.score {
            by_origin
                .entry(origin_of(&c.variant).to_string())
                .or_default()
                .push(score);
        }
    }
    let means = by_origin
        .into_iter()
        .filter_map(|(origin, scores)| aggregate_quality(&scores).ok().map(|m| (origin, m)))
        .collect();
    CorpusReport {
        assessed: Characteristic::assessed_set(standard_configured).into_iter().collect(),
        columns,
        means,
    }
}

/// Builds the report from precomputed verdicts, without judging.
pub fn report_from_verdicts(rows: &[VerdictRow], standard_configured: bool) -> CorpusReport {
    let columns = rows
        .iter()
        .map(|row| column(&row.entry, &row.variant, report_from_flags(row, standard_configured)))
        .collect();
    assemble(columns, standard_configured)
}

/// Judges every variant of every entry. Failures are recorded per column.
pub fn evaluate_corpus(
    entries: &[CorpusEntry],
    judge: &dyn Backend,
    standard_configured: bool,
) -> CorpusReport {
    let mut columns = Vec::new();
    for entry in entries {
        for (variant, text) in &entry.variants {
            let result = Requirement::authored(RequirementId::new(&entry.id), text.as_str())
                .map_err(|e| e.to_string())
                .and_then(|r| evaluate(&r, judge, standard_configured).map_err(|e| e.to_string()));
            if let Err(e) = &result {
                tracing::warn!(entry = %entry.id, %variant, error = %e, "variant not scored");
            }
            columns.push(column(&entry.id, variant, result));
        }
    }
    assemble(columns, standard_configured)
}

impl CorpusReport {
    /// Characteristics as rows, variants as columns, then the score row
    /// and the per-origin means.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if self.columns.is_empty() {
            out.push_str("empty corpus\n");
            return out;
        }
        let headings: Vec<String> = self.columns.iter().map(ColumnResult::heading).collect();
        let _ = writeln!(out, "| Characteristic | {} |", headings.join(" | "));
        let _ = writeln!(out, "|---|{}", "---|".repeat(headings.len()));
        for c in &self.assessed {
            let cells: Vec<&str> = self
                .columns
                .iter()
                .map(|col| match col.verdicts.get(c) {
                    Some(true) => "Yes",
                    Some(false) => "No",
                    None => "-",
                })
                .collect();
            let _ = writeln!(out, "| {} | {} |", c.name(), cells.join(" | "));
        }
        let scores: Vec<String> = self
            .columns
            .iter()
            .map(|col| col.score.map_or_else(|| "error".to_string(), |s| s.to_string()))
            .collect();
        let _ = writeln!(out, "| % fulfilled | {} |", scores.join(" | "));
        for col in self.columns.iter().filter(|c| c.error.is_some()) {
            let _ = writeln!(out, "error {}: {}", col.heading(), col.error.as_deref().unwrap_or(""));
        }
        for (origin, mean) in &self.means {
            let _ = writeln!(out, "mean {origin}: {mean}");
        }
        out
    }
}
