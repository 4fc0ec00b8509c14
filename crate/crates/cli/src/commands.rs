//! Command implementations.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

use reqrefine::clarifier::{generate_questions, AnswerSource, ClarifierError};
use reqrefine::evaluator::{evaluate, gate, EvaluationError};
use reqrefine::orchestrator::{AnswerBook, RefinementSession, RunMode, SessionError, SessionStatus};
use reqrefine::ragstore::{answer_question, RagError, RagStore};
use reqrefine::{compute_quality, unfulfilled, Characteristic, CharacteristicReport, Requirement, RequirementId};

use crate::config::{ConfigError, ProjectConfig};
use crate::corpus::{evaluate_corpus, parse_corpus, parse_verdicts, report_from_verdicts, CorpusError};
use crate::exit::Exit;
use crate::views::{self, SessionSummary};
use crate::{Cli, Command, Io, DEFAULT_CONFIG_FILE};

/// Session logs go here when neither `--log` nor `sessions_dir` says otherwise.
pub const DEFAULT_SESSIONS_DIR: &str = ".reqrefine/sessions";

/// Id given to the requirement passed on the command line.
pub const ROOT_ID: &str = "r1";

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Requirement(#[from] reqrefine::Error),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error(transparent)]
    Clarifier(#[from] ClarifierError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Rag(#[from] RagError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn file_error(path: &Path) -> impl FnOnce(std::io::Error) -> CommandError + '_ {
    move |source| CommandError::File {
        path: path.to_path_buf(),
        source,
    }
}

/// Loads the config named by the flags and applies overrides.
pub fn load_config(cli: &Cli) -> Result<ProjectConfig, CommandError> {
    let mut config = match &cli.config {
        Some(path) => ProjectConfig::load(path)?,
        None if Path::new(DEFAULT_CONFIG_FILE).exists() => ProjectConfig::load(Path::new(DEFAULT_CONFIG_FILE))?,
        None => ProjectConfig::default(),
    };
    for binding in &cli.backends {
        let (role, name) = binding
            .split_once('=')
            .ok_or_else(|| CommandError::Usage(format!("--backend expects ROLE=NAME, got `{binding}`")))?;
        config.roles.bind(role.trim(), name.trim())?;
    }
    if let Some(n) = cli.max_iter {
        config.max_iterations = n;
    }
    config.validate()?;
    Ok(config)
}

pub fn dispatch(cli: &Cli, io: &mut Io<'_>) -> Result<Exit, CommandError> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Evaluate { text } => cmd_evaluate(&config, text, cli.json, io),
        Command::Refine {
            text,
            resume,
            answers,
            log,
        } => {
            let source = match (text, resume) {
                (_, Some(path)) => Source::Resume(path),
                (Some(text), None) => Source::Text(text),
                (None, None) => return Err(CommandError::Usage("refine needs TEXT or --resume".into())),
            };
            cmd_refine(&config, source, answers.as_deref(), log.as_deref(), cli.json, io)
        }
        Command::Ask { text } => cmd_ask(&config, text, cli.json, io),
        Command::Ingest { files } => cmd_ingest(&config, files, cli.json, io),
        Command::Corpus {
            file,
            verdicts,
            report,
        } => cmd_corpus(&config, file, *verdicts, report.as_deref(), cli.json, io),
        Command::Serve { listen } => crate::server::serve_blocking(&config, listen, io),
    }
}

fn root_requirement(text: &str) -> Result<Requirement, CommandError> {
    Ok(Requirement::authored(RequirementId::new(ROOT_ID), text)?)
}

fn json_line(io: &mut Io<'_>, value: &impl serde::Serialize) -> Result<(), CommandError> {
    let text = serde_json::to_string_pretty(value).expect("serializable value");
    writeln!(io.out, "{text}")?;
    Ok(())
}

/// The three-column evaluation table.
pub fn render_report(report: &CharacteristicReport) -> String {
    let mut out = String::from("| Feature Name | Feature Detail | Fulfilled (yes/no) |\n|---|---|---|\n");
    for c in Characteristic::ALL {
        let v = report.verdict(c);
        let mark = if v.fulfilled { "Yes" } else { "No" };
        let note = if report.assessed().contains(&c) { "" } else { " (not assessed)" };
        let _ = writeln!(out, "| {} | {} | {mark}{note} |", c.name(), v.detail.replace('|', "/"));
    }
    out
}

pub fn cmd_evaluate(config: &ProjectConfig, text: &str, json: bool, io: &mut Io<'_>) -> Result<Exit, CommandError> {
    let pipeline = config.pipeline()?;
    let requirement = root_requirement(text)?;
    let report = evaluate(&requirement, pipeline.evaluator.as_ref(), config.conformance_standard_configured)?;
    let score = compute_quality(&report);
    let passed = gate(&report, &config.gate);
    if json {
        json_line(io, &json!({ "report": report, "score": score, "passed": passed }))?;
    } else {
        write!(io.out, "{}", render_report(&report))?;
        writeln!(
            io.out,
            "score: {score} ({} of {} assessed characteristics fulfilled)",
            score.fulfilled_count(),
            score.assessed_count()
        )?;
        writeln!(io.out, "gate: {}", if passed { "passed" } else { "failed" })?;
    }
    Ok(if passed { Exit::Ok } else { Exit::GateFailed })
}

pub enum Source<'a> {
    Text(&'a str),
    Resume(&'a Path),
}

fn default_log_path(config: &ProjectConfig, id: &str) -> PathBuf {
    config
        .sessions_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_SESSIONS_DIR))
        .join(format!("{id}.jsonl"))
}

/// Asks on the terminal for pending questions. Each question is asked
/// once; an empty line skips it and end of input stops asking.
#[derive(Default)]
struct Prompter {
    skipped: BTreeSet<String>,
    closed: bool,
}

impl Prompter {
    /// Returns how many answers were attached.
    fn ask(&mut self, session: &mut RefinementSession, io: &mut Io<'_>) -> Result<usize, CommandError> {
        let mut attached = 0;
        for question in session.pending_questions() {
            if self.closed {
                break;
            }
            if self.skipped.contains(&question.id) {
                continue;
            }
            writeln!(io.err, "[{}] {} ({})", question.id, question.text, question.target)?;
            write!(io.err, "> ")?;
            io.err.flush()?;
            let mut line = String::new();
            if io.input.read_line(&mut line)? == 0 {
                writeln!(io.err)?;
                self.closed = true;
                break;
            }
            let answer = line.trim();
            if answer.is_empty() {
                self.skipped.insert(question.id.clone());
                continue;
            }
            session.attach_answer(&question.id, answer, AnswerSource::Stakeholder, vec![])?;
            attached += 1;
        }
        Ok(attached)
    }
}

pub fn exit_for(status: SessionStatus) -> Exit {
    match status {
        SessionStatus::Converged => Exit::Ok,
        SessionStatus::Exhausted | SessionStatus::AwaitingAnswers | SessionStatus::Running => Exit::Incomplete,
        SessionStatus::Failed => Exit::SessionFailed,
    }
}

pub fn cmd_refine(
    config: &ProjectConfig,
    source: Source<'_>,
    answers: Option<&Path>,
    log: Option<&Path>,
    json: bool,
    io: &mut Io<'_>,
) -> Result<Exit, CommandError> {
    let pipeline = config.pipeline()?;
    let book = match answers {
        Some(path) => AnswerBook::load(path)?,
        None => AnswerBook::default(),
    };
    let mut session = match source {
        Source::Resume(path) => RefinementSession::resume(path)?,
        Source::Text(text) => {
            let mut session =
                RefinementSession::new(root_requirement(text)?, config.session_options(RunMode::Automatic))?;
            let path = log.map_or_else(|| default_log_path(config, session.id()), Path::to_path_buf);
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(file_error(dir))?;
            }
            session.log_to(&path)?;
            session
        }
    };
    let mut prompter = Prompter::default();
    loop {
        let status = session.advance(&pipeline, &book)?;
        if status != SessionStatus::AwaitingAnswers || prompter.ask(&mut session, io)? == 0 {
            break;
        }
    }
    let state = session.state();
    let summary = SessionSummary::of(&session);
    if json {
        json_line(
            io,
            &json!({ "session": summary, "leaves": views::leaves(state), "questions": views::questions(state) }),
        )?;
    } else {
        let status = serde_json::to_value(state.status).expect("status serializes");
        writeln!(
            io.out,
            "status: {} after {} iteration(s)",
            status.as_str().unwrap_or_default(),
            state.iterations_completed
        )?;
        if let Some(failure) = &state.failure {
            writeln!(io.out, "failure: {failure}")?;
        }
        for leaf in state.leaf_summaries() {
            let score = leaf.score.map_or_else(|| "-".to_string(), |s| s.to_string());
            writeln!(
                io.out,
                "{} [{}] {score}  {}",
                leaf.id,
                leaf.pattern_id.as_deref().unwrap_or("-"),
                leaf.text
            )?;
        }
        let pending = state.pending_questions();
        if !pending.is_empty() {
            writeln!(io.out, "unanswered: {}", pending.iter().map(|q| q.id.as_str()).collect::<Vec<_>>().join(", "))?;
        }
        if let Some(path) = session.log_path() {
            writeln!(io.out, "session log: {}", path.display())?;
        }
    }
    Ok(exit_for(state.status))
}

pub fn cmd_ask(config: &ProjectConfig, text: &str, json: bool, io: &mut Io<'_>) -> Result<Exit, CommandError> {
    let pipeline = config.pipeline()?;
    let requirement = root_requirement(text)?;
    let report = evaluate(&requirement, pipeline.evaluator.as_ref(), config.conformance_standard_configured)?;
    let mut missing: BTreeSet<Characteristic> = unfulfilled(&report);
    missing.extend(config.gate.mandatory().iter().filter(|c| !report.is_fulfilled(**c)));
    if missing.is_empty() {
        if json {
            json_line(io, &json!({ "missing": [], "questions": [] }))?;
        } else {
            writeln!(io.out, "nothing to ask: every assessed characteristic is fulfilled")?;
        }
        return Ok(Exit::Ok);
    }
    let generated = generate_questions(&requirement, &missing, pipeline.clarifier.as_ref(), 1)?;
    let mut rows = Vec::new();
    for question in &generated.questions {
        let suggestion = match &pipeline.rag {
            Some(store) => answer_question(store, question, pipeline.rag_k, pipeline.answerer.as_ref())?
                .answer()
                .map(str::to_string),
            None => None,
        };
        rows.push((question, suggestion));
    }
    if json {
        let questions: Vec<_> = rows
            .iter()
            .map(|(q, s)| json!({ "id": q.id, "target": q.target, "text": q.text, "suggestion": s }))
            .collect();
        json_line(io, &json!({ "missing": missing, "questions": questions }))?;
    } else {
        for (question, suggestion) in rows {
            writeln!(io.out, "{} [{}] {}", question.id, question.target, question.text)?;
            if let Some(s) = suggestion {
                writeln!(io.out, "    suggested: {s}")?;
            }
        }
    }
    Ok(Exit::Ok)
}

pub fn cmd_ingest(config: &ProjectConfig, files: &[PathBuf], json: bool, io: &mut Io<'_>) -> Result<Exit, CommandError> {
    let rag = config
        .rag
        .as_ref()
        .ok_or_else(|| CommandError::Usage("ingest needs a [rag] section in the config".into()))?;
    let path = rag
        .index_path
        .as_ref()
        .ok_or_else(|| CommandError::Usage("ingest needs rag.index_path in the config".into()))?;
    let store = if path.exists() {
        RagStore::open(rag.clone(), path)?
    } else {
        RagStore::new(rag.clone())?
    };
    let mut added = 0;
    for file in files {
        let ids = store.ingest_file(file).map_err(|e| match e {
            RagError::Io(source) => CommandError::File {
                path: file.clone(),
                source,
            },
            other => other.into(),
        })?;
        added += ids.len();
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(file_error(dir))?;
    }
    store.save(path)?;
    let total = store.index().len();
    if json {
        json_line(
            io,
            &json!({ "files": files.len(), "added": added, "total": total, "index": path }),
        )?;
    } else {
        writeln!(
            io.out,
            "indexed {added} chunk(s) from {} file(s); {total} in {}",
            files.len(),
            path.display()
        )?;
    }
    Ok(Exit::Ok)
}

pub fn cmd_corpus(
    config: &ProjectConfig,
    file: &Path,
    verdicts: bool,
    report_path: Option<&Path>,
    json: bool,
    io: &mut Io<'_>,
) -> Result<Exit, CommandError> {
    let source = std::fs::read_to_string(file).map_err(file_error(file))?;
    let standard = config.conformance_standard_configured;
    let report = if verdicts {
        report_from_verdicts(&parse_verdicts(&source)?, standard)
    } else {
        let entries = parse_corpus(&source)?;
        let pipeline = config.pipeline()?;
        evaluate_corpus(&entries, pipeline.evaluator.as_ref(), standard)
    };
    if let Some(path) = report_path {
        let text = serde_json::to_string_pretty(&report).expect("serializable report");
        std::fs::write(path, text + "\n").map_err(file_error(path))?;
    }
    if json {
        json_line(io, &report)?;
    } else {
        write!(io.out, "{}", report.render())?;
    }
    Ok(if report.columns.iter().all(|c| c.error.is_none()) {
        Exit::Ok
    } else {
        Exit::GateFailed
    })
}
