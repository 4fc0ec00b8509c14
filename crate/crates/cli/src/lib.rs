//! Command line, corpus harness and HTTP service for reqrefine.
//!
//! [`run`] is the whole command line behind an injectable terminal, so the
//! binary in `main.rs` is a thin shell and tests can drive every command.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod exit;
pub mod server;
pub mod views;

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{ConfigError, ProjectConfig};
pub use exit::Exit;

/// Config file picked up from the working directory when `--config` is absent.
pub const DEFAULT_CONFIG_FILE: &str = "reqrefine.toml";

#[derive(Debug, Parser)]
#[command(name = "reqrefine", version, about = "Evaluate and refine software requirements")]
pub struct Cli {
    /// Project config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Binds a role (evaluator, clarifier, answerer, rewriter) to a named backend.
    #[arg(long = "backend", global = true, value_name = "ROLE=NAME")]
    pub backends: Vec<String>,
    /// Overrides the iteration limit.
    #[arg(long = "max-iter", global = true, value_name = "N")]
    pub max_iter: Option<u32>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Judges one requirement and prints its table and score.
    Evaluate {
        text: String,
    },
    /// Runs a refinement session to completion.
    Refine {
        #[arg(required_unless_present = "resume", conflicts_with = "resume")]
        text: Option<String>,
        /// Continues the session recorded in this log.
        #[arg(long, value_name = "LOG")]
        resume: Option<PathBuf>,
        /// Answers file used before asking on the terminal.
        #[arg(long, value_name = "FILE")]
        answers: Option<PathBuf>,
        /// Where to write the session log.
        #[arg(long, value_name = "PATH", conflicts_with = "resume")]
        log: Option<PathBuf>,
    },
    /// Prints clarifying questions for one requirement.
    Ask {
        text: String,
    },
    /// Adds documents to the retrieval index.
    Ingest {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Compares variants over a corpus.
    Corpus {
        file: PathBuf,
        /// FILE holds precomputed verdict vectors instead of texts.
        #[arg(long)]
        verdicts: bool,
        /// Also writes the report as JSON to this path.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
    /// Serves the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8700", value_name = "ADDR")]
        listen: String,
    },
}

/// Terminal streams handed to a command.
pub struct Io<'a> {
    pub input: &'a mut dyn BufRead,
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { Exit::Usage } else { Exit::Ok };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code.code();
        }
    };
    let mut io = Io { input, out, err };
    match commands::dispatch(&cli, &mut io) {
        Ok(exit) => exit.code(),
        Err(e) => {
            let _ = writeln!(io.err, "error: {e}");
            Exit::Error.code()
        }
    }
}
