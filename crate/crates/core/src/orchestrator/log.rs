use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::events::{SessionEvent, SessionHeader};
use super::SessionError;

pub const LOG_FORMAT: &str = "reqrefine-session";
pub const LOG_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    format: String,
    version: u32,
    session: SessionHeader,
}

/// Append-only session log: a header line, then one event per line.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    out: BufWriter<File>,
}

impl EventLog {
    /// Creates a new log. Fails if the file already exists.
    pub fn create(path: &Path, header: &SessionHeader) -> Result<Self, SessionError> {
        let file = OpenOptions::new().write(true).create_new(true).open(path)?;
        let mut log = Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        let line = serde_json::to_string(&HeaderLine {
            format: LOG_FORMAT.into(),
            version: LOG_VERSION,
            session: header.clone(),
        })
        .expect("serializable header");
        writeln!(log.out, "{line}")?;
        log.out.flush()?;
        Ok(log)
    }

    /// Opens an existing log for appending after validating its content.
    pub fn open(path: &Path) -> Result<(Self, SessionHeader, Vec<SessionEvent>), SessionError> {
        let (header, events) = read_log(path)?;
        let file = OpenOptions::new().append(true).open(path)?;
        Ok((
            Self {
                path: path.to_path_buf(),
                out: BufWriter::new(file),
            },
            header,
            events,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, event: &SessionEvent) -> Result<(), SessionError> {
        let line = serde_json::to_string(event).expect("serializable event");
        writeln!(self.out, "{line}")?;
        self.out.flush()?;
        Ok(())
    }
}

/// Reads a log written by [`EventLog`].
pub fn read_log(path: &Path) -> Result<(SessionHeader, Vec<SessionEvent>), SessionError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let first = lines
        .next()
        .ok_or_else(|| SessionError::Corrupt("empty session log".into()))??;
    let header: HeaderLine = serde_json::from_str(&first)
        .map_err(|e| SessionError::Corrupt(format!("log header: {e}")))?;
    if header.format != LOG_FORMAT || header.version != LOG_VERSION {
        return Err(SessionError::Corrupt(format!(
            "unsupported log format {} version {}",
            header.format, header.version
        )));
    }
    let mut events = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event: SessionEvent = serde_json::from_str(&line)
            .map_err(|e| SessionError::Corrupt(format!("log line {}: {e}", n + 2)))?;
        events.push(event);
    }
    Ok((header.session, events))
}
