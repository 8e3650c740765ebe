//! Readers and writers for the on-disk formats.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

pub mod categories;
pub mod claims;
pub mod jsonl;
pub mod pos;
pub mod vectors;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl FormatError {
    pub(crate) fn at(line: usize, message: impl ToString) -> Self {
        FormatError::Line { line, message: message.to_string() }
    }

    /// The 1-based line an error refers to, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            FormatError::Line { line, .. } => Some(*line),
            FormatError::Io(_) => None,
        }
    }
}

/// Lines of a reader with 1-based numbers and `\r` stripped.
pub(crate) fn numbered_lines<R: io::BufRead>(r: R) -> impl Iterator<Item = Result<(usize, String), FormatError>> {
    r.lines().enumerate().map(|(i, l)| {
        let mut l = l.map_err(|e| match e.kind() {
            io::ErrorKind::InvalidData => FormatError::at(i + 1, "not valid UTF-8"),
            _ => FormatError::Io(e),
        })?;
        if l.ends_with('\r') {
            l.pop();
        }
        Ok((i + 1, l))
    })
}

pub fn open(path: &Path) -> io::Result<BufReader<File>> {
    File::open(path).map(BufReader::new)
}

/// Writes through a temporary sibling and renames it into place, so readers
/// never see a half-written file.
pub fn write_atomic(path: &Path, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> io::Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        f(&mut w)?;
        w.flush()?;
    }
    std::fs::rename(&tmp, path)
}
