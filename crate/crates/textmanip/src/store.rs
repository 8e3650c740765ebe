//! Durable label storage: a [`LabelBook`] backed by an append-only JSONL
//! log. Each accepted entry is written and synced before it is applied, and
//! reopening a store replays its log.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use textmanip_core::annotation::{Ack, AnnotationError, AnnotationLabel, AnnotationTask, Entry, LabelBook};

use crate::formats::jsonl::{read_jsonl, write_line};
use crate::formats::{numbered_lines, open, FormatError};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error(transparent)]
    Rejected(#[from] AnnotationError),
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("{path}: line {line}: {source}")]
    Replay { path: PathBuf, line: usize, source: AnnotationError },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub struct LabelStore {
    book: LabelBook,
    log: Option<File>,
}

impl LabelStore {
    pub fn in_memory(tasks: Vec<AnnotationTask>) -> Self {
        Self { book: LabelBook::new(tasks), log: None }
    }

    /// Opens (or creates) the log at `path` and replays it.
    pub fn open(tasks: Vec<AnnotationTask>, path: &Path) -> Result<Self, StoreError> {
        let mut book = LabelBook::new(tasks);
        if path.exists() {
            for item in numbered_lines(open(path)?) {
                let (n, line) = item.map_err(|source| StoreError::Format { path: path.into(), source })?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry = parse_entry(&line)
                    .map_err(|e| StoreError::Format { path: path.into(), source: FormatError::at(n, e) })?;
                book.apply(entry).map_err(|source| StoreError::Replay { path: path.into(), line: n, source })?;
            }
        }
        let log = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { book, log: Some(log) })
    }

    pub fn book(&self) -> &LabelBook {
        &self.book
    }

    pub fn record(&mut self, entry: Entry) -> Result<Ack, StoreError> {
        self.book.validate(&entry)?;
        if let Some(log) = &mut self.log {
            write_line(log, &entry)?;
            log.flush()?;
            log.sync_data()?;
        }
        Ok(self.book.apply(entry)?)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LogLine {
    Entry(Entry),
    Label(AnnotationLabel),
}

/// Accepts log entries as well as bare label objects.
fn parse_entry(line: &str) -> Result<Entry, serde_json::Error> {
    Ok(match serde_json::from_str(line)? {
        LogLine::Entry(e) => e,
        LogLine::Label(l) => Entry::Label(l),
    })
}

/// Reads a label log or a file of bare labels, keeping file order.
pub fn read_entries<R: BufRead>(r: R) -> Result<Vec<Entry>, FormatError> {
    let mut out = Vec::new();
    for item in numbered_lines(r) {
        let (n, line) = item?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_entry(&line).map_err(|e| FormatError::at(n, e))?);
    }
    Ok(out)
}

pub fn read_tasks(path: &Path) -> Result<Vec<AnnotationTask>, StoreError> {
    read_jsonl(open(path)?).map_err(|source| StoreError::Format { path: path.into(), source })
}
