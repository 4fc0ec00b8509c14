//! Mutations of the reference evaluation and question tables.

use std::collections::BTreeSet;

use reqrefine::clarifier::parse_questions;
use reqrefine::evaluator::{parse_evaluation, TABLE_HEADER as EVAL_HEADER};
use reqrefine::gateway::{parse_table, ParseError};
use reqrefine::{Characteristic, RequirementId};

use super::fixtures::{EVALUATION_REPLY, QUESTION_REPLY};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    NoTable,
    RowArity(usize),
    Schema,
}

pub struct Mutation {
    pub name: &'static str,
    pub text: String,
    pub expect: Expect,
    pub questions: bool,
}

fn lines(t: &str) -> Vec<String> {
    t.lines().map(str::to_string).collect()
}

fn drop_line(t: &str, i: usize) -> String {
    let mut l = lines(t);
    l.remove(i);
    l.join("\n")
}

/// Removes the `col`-th cell of line `i`.
fn drop_cell(t: &str, i: usize, col: usize) -> String {
    let mut l = lines(t);
    let mut cells: Vec<&str> = l[i].trim_matches('|').split('|').collect();
    cells.remove(col);
    l[i] = format!("|{}|", cells.join("|"));
    l.join("\n")
}

/// Removes column `col` from every line.
fn drop_column(t: &str, col: usize) -> String {
    (0..lines(t).len()).fold(t.to_string(), |acc, i| drop_cell(&acc, i, col))
}

fn swap_header(t: &str, a: &str, b: &str) -> String {
    let mut l = lines(t);
    l[0] = l[0].replace(a, "\u{0}").replace(b, a).replace('\u{0}', b);
    l.join("\n")
}

pub fn mutations() -> Vec<Mutation> {
    let eval = |name, text, expect| Mutation { name, text, expect, questions: false };
    let ques = |name, text, expect| Mutation { name, text, expect, questions: true };
    vec![
        eval("evaluation: detail column dropped", drop_column(EVALUATION_REPLY, 1), Expect::NoTable),
        eval("evaluation: verdict column dropped", drop_column(EVALUATION_REPLY, 2), Expect::NoTable),
        eval("evaluation: name column dropped", drop_column(EVALUATION_REPLY, 0), Expect::NoTable),
        eval("evaluation: header name and detail swapped", swap_header(EVALUATION_REPLY, "Feature Name", "Feature Detail"), Expect::NoTable),
        eval("evaluation: header detail and verdict swapped", swap_header(EVALUATION_REPLY, "Feature Detail", "Fulfilled (yes/no)"), Expect::NoTable),
        eval("evaluation: header row missing", drop_line(EVALUATION_REPLY, 0), Expect::NoTable),
        eval("evaluation: only prose", "All characteristics are met.".into(), Expect::NoTable),
        eval("evaluation: cell dropped on Unambiguous", drop_cell(EVALUATION_REPLY, 4, 1), Expect::RowArity(3)),
        eval("evaluation: cell dropped on Necessary", drop_cell(EVALUATION_REPLY, 2, 2), Expect::RowArity(1)),
        eval("evaluation: cell dropped on Conforming", drop_cell(EVALUATION_REPLY, 10, 1), Expect::RowArity(9)),
        eval("evaluation: extra cell on Complete", EVALUATION_REPLY.replace("| Complete | Contains all necessary information | No |", "| Complete | Contains | all | No |"), Expect::RowArity(4)),
        eval("evaluation: Necessary row missing", drop_line(EVALUATION_REPLY, 2), Expect::Schema),
        eval("evaluation: Verifiable row missing", drop_line(EVALUATION_REPLY, 8), Expect::Schema),
        eval("evaluation: Correct row missing", drop_line(EVALUATION_REPLY, 9), Expect::Schema),
        eval("evaluation: unknown characteristic", EVALUATION_REPLY.replace("| Feasible |", "| Pleasant |"), Expect::Schema),
        eval("evaluation: verdict neither yes nor no", EVALUATION_REPLY.replace("Clearly defines the function | No", "Clearly defines the function | Maybe"), Expect::Schema),
        eval("evaluation: duplicated row", EVALUATION_REPLY.replace("| Singular |", "| Necessary |"), Expect::Schema),
        ques("questions: question column dropped", drop_column(QUESTION_REPLY, 1), Expect::NoTable),
        ques("questions: header swapped", swap_header(QUESTION_REPLY, "Feature Name", "Suggested Questions"), Expect::NoTable),
        ques("questions: Verifiable row missing", drop_line(QUESTION_REPLY, 4), Expect::Schema),
    ]
}

fn classify(result: Result<(), ParseError>) -> Option<Expect> {
    match result {
        Ok(()) => None,
        Err(ParseError::NoTable { .. }) => Some(Expect::NoTable),
        Err(ParseError::RowArity { row, .. }) => Some(Expect::RowArity(row)),
        Err(ParseError::Schema(_)) => Some(Expect::Schema),
        Err(ParseError::EmptyHeader) => None,
    }
}

pub fn missing_for_question_reply() -> BTreeSet<Characteristic> {
    [Characteristic::Unambiguous, Characteristic::Complete, Characteristic::Verifiable].into()
}

/// Runs the mutation through the parser that would see it in a session.
pub fn outcome(m: &Mutation) -> Option<Expect> {
    let id = RequirementId::new("r1");
    let result = if m.questions {
        parse_questions(&m.text, &id, &missing_for_question_reply(), 1).map(|_| ())
    } else {
        parse_evaluation(&m.text, &id, false, "fixture").map(|_| ())
    };
    classify(result)
}

/// True iff both reference tables survive parse, render, parse unchanged.
pub fn reference_tables_roundtrip() -> Result<(), String> {
    for (text, header) in [
        (EVALUATION_REPLY, EVAL_HEADER.to_vec()),
        (QUESTION_REPLY, vec!["Feature Name", "Suggested Questions"]),
    ] {
        let t = parse_table(text, &header).map_err(|e| e.to_string())?;
        let again = parse_table(&t.render(), &header).map_err(|e| e.to_string())?;
        if again != t {
            return Err("render/parse changed the table".into());
        }
        let source_rows = text.lines().count() - 2;
        if t.rows().len() != source_rows {
            return Err(format!("{} rows parsed, {source_rows} in the source", t.rows().len()));
        }
    }
    Ok(())
}
