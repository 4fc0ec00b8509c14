//! Pipe-delimited tables in model output.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no table with header [{}] found{}", expected.join(", "), found_hint(found))]
    NoTable {
        expected: Vec<String>,
        found: Vec<Vec<String>>,
    },
    #[error("table row {row} has {actual} cells, expected {expected}: `{line}`")]
    RowArity {
        row: usize,
        expected: usize,
        actual: usize,
        line: String,
    },
    #[error("expected header is empty")]
    EmptyHeader,
    /// Table parsed, but its content does not satisfy the caller's schema.
    #[error("{0}")]
    Schema(String),
}

fn found_hint(found: &[Vec<String>]) -> String {
    if found.is_empty() {
        String::new()
    } else {
        let headers: Vec<String> = found.iter().map(|h| format!("[{}]", h.join(", "))).collect();
        format!(" (saw {})", headers.join(", "))
    }
}

/// A table with a header and equal-length rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl ParsedTable {
    pub fn new(header: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self, ParseError> {
        if header.is_empty() {
            return Err(ParseError::EmptyHeader);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != header.len() {
                return Err(ParseError::RowArity {
                    row: i + 1,
                    expected: header.len(),
                    actual: row.len(),
                    line: row.join(" | "),
                });
            }
        }
        Ok(Self { header, rows })
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    /// Renders as a markdown-style pipe table with a separator row.
    pub fn render(&self) -> String {
        let mut out = String::new();
        push_row(&mut out, &self.header);
        out.push('|');
        for _ in &self.header {
            out.push_str(" --- |");
        }
        out.push('\n');
        for row in &self.rows {
            push_row(&mut out, row);
        }
        out
    }
}

fn push_row(out: &mut String, cells: &[String]) {
    out.push('|');
    for cell in cells {
        out.push(' ');
        out.push_str(&cell.replace('|', "\\|"));
        out.push_str(" |");
    }
    out.push('\n');
}

/// Splits one table line into trimmed cells. `\|` is a literal pipe.
fn split_cells(line: &str) -> Vec<String> {
    let mut line = line.trim();
    if let Some(rest) = line.strip_prefix('|') {
        line = rest;
    }
    if line.ends_with('|') && !line.ends_with("\\|") {
        line = &line[..line.len() - 1];
    }
    let mut cells = Vec::new();
    let mut cell = String::new();
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' if chars.peek() == Some(&'|') => {
                cell.push('|');
                chars.next();
            }
            '|' => cells.push(std::mem::take(&mut cell)),
            _ => cell.push(c),
        }
    }
    cells.push(cell);
    cells.into_iter().map(|c| c.trim().to_string()).collect()
}

fn is_separator(cells: &[String]) -> bool {
    cells.iter().all(|c| {
        !c.is_empty() && c.contains('-') && c.chars().all(|ch| matches!(ch, '-' | ':' | ' '))
    })
}

fn has_unescaped_pipe(line: &str) -> bool {
    let mut prev = '\0';
    for c in line.chars() {
        if c == '|' && prev != '\\' {
            return true;
        }
        prev = c;
    }
    false
}

/// Finds the first pipe table whose header equals `expected_header`
/// (case-insensitive, same order) and returns its data rows.
pub fn parse_table(text: &str, expected_header: &[&str]) -> Result<ParsedTable, ParseError> {
    if expected_header.is_empty() {
        return Err(ParseError::EmptyHeader);
    }
    let lines: Vec<&str> = text.lines().collect();
    let mut found = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if !has_unescaped_pipe(lines[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < lines.len() && has_unescaped_pipe(lines[i]) {
            i += 1;
        }
        let block = &lines[start..i];
        let header = split_cells(block[0]);
        let matches = header.len() == expected_header.len()
            && header
                .iter()
                .zip(expected_header)
                .all(|(h, e)| h.eq_ignore_ascii_case(e.trim()));
        if !matches {
            found.push(header);
            continue;
        }
        let mut rows = Vec::new();
        for line in &block[1..] {
            let cells = split_cells(line);
            if is_separator(&cells) {
                continue;
            }
            if cells.len() != header.len() {
                return Err(ParseError::RowArity {
                    row: rows.len() + 1,
                    expected: header.len(),
                    actual: cells.len(),
                    line: line.trim().to_string(),
                });
            }
            rows.push(cells);
        }
        return ParsedTable::new(header, rows);
    }
    Err(ParseError::NoTable {
        expected: expected_header.iter().map(|s| s.to_string()).collect(),
        found,
    })
}
