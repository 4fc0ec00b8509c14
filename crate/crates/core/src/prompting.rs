//! Prompt assembly.
//!
//! A prompt has up to four elements (instruction, context, input and the
//! desired output format) plus optional worked examples. [`PromptSpec::render`]
//! lays them out in a fixed order under plain-text labels, and
//! [`PromptSections::parse`] reads a rendered prompt back, which is what the
//! offline heuristic backend uses to understand what it is being asked.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const INSTRUCTION: &str = "Instruction:";
const CONTEXT: &str = "Context:";
const INPUT: &str = "Input:";
const OUTPUT_FORMAT: &str = "Output format:";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("prompt instruction is empty")]
    EmptyInstruction,
    #[error("example shot has an empty {0}")]
    EmptyShot(&'static str),
    #[error("template `{template}` has unbound placeholders: {}", missing.join(", "))]
    Unbound {
        template: String,
        missing: Vec<String>,
    },
    #[error("reading template {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A worked example of the task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleShot {
    demo_input: String,
    demo_output: String,
}

impl ExampleShot {
    pub fn new(
        demo_input: impl Into<String>,
        demo_output: impl Into<String>,
    ) -> Result<Self, PromptError> {
        let demo_input = demo_input.into();
        let demo_output = demo_output.into();
        if demo_input.trim().is_empty() {
            return Err(PromptError::EmptyShot("input"));
        }
        if demo_output.trim().is_empty() {
            return Err(PromptError::EmptyShot("output"));
        }
        Ok(Self {
            demo_input,
            demo_output,
        })
    }

    pub fn demo_input(&self) -> &str {
        &self.demo_input
    }

    pub fn demo_output(&self) -> &str {
        &self.demo_output
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotMode {
    ZeroShot,
    OneShot,
    FewShot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    instruction: String,
    context: Option<String>,
    input: Option<String>,
    output_format: Option<String>,
    shots: Vec<ExampleShot>,
}

impl PromptSpec {
    pub fn new(instruction: impl Into<String>) -> Result<Self, PromptError> {
        let instruction = instruction.into();
        if instruction.trim().is_empty() {
            return Err(PromptError::EmptyInstruction);
        }
        Ok(Self {
            instruction,
            context: None,
            input: None,
            output_format: None,
            shots: Vec::new(),
        })
    }

    pub fn with_context(mut self, context: impl Into<String>) -> Self {
        self.context = Some(context.into());
        self
    }

    pub fn with_input(mut self, input: impl Into<String>) -> Self {
        self.input = Some(input.into());
        self
    }

    pub fn with_output_format(mut self, format: impl Into<String>) -> Self {
        self.output_format = Some(format.into());
        self
    }

    pub fn with_shot(mut self, shot: ExampleShot) -> Self {
        self.shots.push(shot);
        self
    }

    pub fn instruction(&self) -> &str {
        &self.instruction
    }

    pub fn context(&self) -> Option<&str> {
        self.context.as_deref()
    }

    pub fn input(&self) -> Option<&str> {
        self.input.as_deref()
    }

    pub fn output_format(&self) -> Option<&str> {
        self.output_format.as_deref()
    }

    pub fn shots(&self) -> &[ExampleShot] {
        &self.shots
    }

    pub fn shot_mode(&self) -> ShotMode {
        match self.shots.len() {
            0 => ShotMode::ZeroShot,
            1 => ShotMode::OneShot,
            _ => ShotMode::FewShot,
        }
    }

    /// Renders instruction, context, shots, input and output format, in
    /// that order. Absent elements produce no section.
    pub fn render(&self) -> String {
        let mut sections = vec![format!("{INSTRUCTION}\n{}", self.instruction)];
        if let Some(context) = &self.context {
            sections.push(format!("{CONTEXT}\n{context}"));
        }
        for (i, shot) in self.shots.iter().enumerate() {
            let n = i + 1;
            sections.push(format!(
                "Example {n} input:\n{}\nExample {n} output:\n{}",
                shot.demo_input, shot.demo_output
            ));
        }
        if let Some(input) = &self.input {
            sections.push(format!("{INPUT}\n{input}"));
        }
        if let Some(format) = &self.output_format {
            sections.push(format!("{OUTPUT_FORMAT}\n{format}"));
        }
        sections.join("\n\n")
    }
}

/// The labelled sections recovered from a rendered prompt.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PromptSections {
    pub instruction: Option<String>,
    pub context: Option<String>,
    pub input: Option<String>,
    pub output_format: Option<String>,
    pub shots: Vec<(String, String)>,
}

impl PromptSections {
    /// Splits a prompt produced by [`PromptSpec::render`] back into its
    /// elements. Text before the first label is ignored.
    pub fn parse(prompt: &str) -> Self {
        let mut out = PromptSections::default();
        let mut current: Option<(Label, Vec<&str>)> = None;
        let mut previous_blank = true;
        let mut pending_shot_input: Option<String> = None;

        let flush = |out: &mut PromptSections,
                         current: Option<(Label, Vec<&str>)>,
                         pending: &mut Option<String>| {
            let Some((label, mut lines)) = current else {
                return;
            };
            while lines.last().is_some_and(|l| l.trim().is_empty()) {
                lines.pop();
            }
            let body = lines.join("\n");
            match label {
                Label::Instruction => out.instruction = Some(body),
                Label::Context => out.context = Some(body),
                Label::Input => out.input = Some(body),
                Label::OutputFormat => out.output_format = Some(body),
                Label::ShotInput => *pending = Some(body),
                Label::ShotOutput => {
                    let input = pending.take().unwrap_or_default();
                    out.shots.push((input, body));
                }
            }
        };

        for line in prompt.lines() {
            let label = Label::recognise(line);
            let starts_section = match label {
                Some(Label::ShotOutput) => current
                    .as_ref()
                    .is_some_and(|(l, _)| *l == Label::ShotInput),
                Some(_) => previous_blank,
                None => false,
            };
            if starts_section {
                flush(&mut out, current.take(), &mut pending_shot_input);
                current = Some((label.expect("checked above"), Vec::new()));
            } else if let Some((_, lines)) = current.as_mut() {
                lines.push(line);
            }
            previous_blank = line.trim().is_empty();
        }
        flush(&mut out, current.take(), &mut pending_shot_input);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Label {
    Instruction,
    Context,
    Input,
    OutputFormat,
    ShotInput,
    ShotOutput,
}

impl Label {
    fn recognise(line: &str) -> Option<Label> {
        match line {
            INSTRUCTION => return Some(Label::Instruction),
            CONTEXT => return Some(Label::Context),
            INPUT => return Some(Label::Input),
            OUTPUT_FORMAT => return Some(Label::OutputFormat),
            _ => {}
        }
        let rest = line.strip_prefix("Example ")?;
        let (number, tail) = rest.split_once(' ')?;
        if number.is_empty() || !number.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        match tail {
            "input:" => Some(Label::ShotInput),
            "output:" => Some(Label::ShotOutput),
            _ => None,
        }
    }
}

/// A named text template with `{placeholder}` slots.
///
/// `{{` and `}}` render as literal braces. Every placeholder that appears in
/// the body is required.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    name: String,
    body: String,
    required_placeholders: BTreeSet<String>,
}

enum Piece<'a> {
    Text(&'a str),
    Hole(&'a str),
}

fn pieces(body: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let bytes = body.as_bytes();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' if bytes.get(i + 1) == Some(&b'{') => {
                out.push(Piece::Text(&body[start..=i]));
                i += 2;
                start = i;
            }
            b'}' if bytes.get(i + 1) == Some(&b'}') => {
                out.push(Piece::Text(&body[start..=i]));
                i += 2;
                start = i;
            }
            b'{' => {
                let name_len = bytes[i + 1..]
                    .iter()
                    .take_while(|b| b.is_ascii_alphanumeric() || **b == b'_')
                    .count();
                if name_len > 0 && bytes.get(i + 1 + name_len) == Some(&b'}') {
                    out.push(Piece::Text(&body[start..i]));
                    out.push(Piece::Hole(&body[i + 1..i + 1 + name_len]));
                    i += name_len + 2;
                    start = i;
                } else {
                    i += 1;
                }
            }
            _ => i += 1,
        }
    }
    out.push(Piece::Text(&body[start..]));
    out
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, body: impl Into<String>) -> Self {
        let body = body.into();
        let required_placeholders = pieces(&body)
            .into_iter()
            .filter_map(|p| match p {
                Piece::Hole(name) => Some(name.to_string()),
                Piece::Text(_) => None,
            })
            .collect();
        Self {
            name: name.into(),
            body,
            required_placeholders,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn required_placeholders(&self) -> &BTreeSet<String> {
        &self.required_placeholders
    }

    pub fn render(&self, bindings: &BTreeMap<String, String>) -> Result<String, PromptError> {
        let missing: Vec<String> = self
            .required_placeholders
            .iter()
            .filter(|p| !bindings.contains_key(*p))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(PromptError::Unbound {
                template: self.name.clone(),
                missing,
            });
        }
        let mut out = String::with_capacity(self.body.len());
        for piece in pieces(&self.body) {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Hole(name) => out.push_str(&bindings[name]),
            }
        }
        Ok(out)
    }

    /// Loads every regular, non-hidden file in `dir` as a template named by
    /// its file stem. Returned in name order.
    pub fn load_dir(dir: &Path) -> Result<Vec<PromptTemplate>, PromptError> {
        let io = |source| PromptError::Io {
            path: dir.display().to_string(),
            source,
        };
        let mut templates = Vec::new();
        for entry in fs::read_dir(dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            if stem.starts_with('.') || !path.is_file() {
                continue;
            }
            let body = fs::read_to_string(&path).map_err(|source| PromptError::Io {
                path: path.display().to_string(),
                source,
            })?;
            templates.push(PromptTemplate::new(stem, body));
        }
        templates.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(templates)
    }
}
