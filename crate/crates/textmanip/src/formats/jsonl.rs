//! One JSON value per line. Blank lines are skipped on read.

use std::io::{self, BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;
use textmanip_core::Article;

use super::{numbered_lines, FormatError};

pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(r: R) -> Result<Vec<T>, FormatError> {
    let mut out = Vec::new();
    for item in numbered_lines(r) {
        let (n, line) = item?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| FormatError::at(n, e))?);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a, W: Write + ?Sized>(
    w: &mut W,
    items: impl IntoIterator<Item = &'a T>,
) -> io::Result<()> {
    for item in items {
        write_line(w, item)?;
    }
    Ok(())
}

pub fn write_line<T: Serialize + ?Sized, W: Write + ?Sized>(w: &mut W, item: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *w, item)?;
    w.write_all(b"\n")
}

/// Articles, each checked for a non-empty title and body.
pub fn read_articles<R: BufRead>(r: R) -> Result<Vec<Article>, FormatError> {
    let mut out = Vec::new();
    for item in numbered_lines(r) {
        let (n, line) = item?;
        if line.trim().is_empty() {
            continue;
        }
        let a: Article = serde_json::from_str(&line).map_err(|e| FormatError::at(n, e))?;
        a.validate().map_err(|e| FormatError::at(n, e))?;
        out.push(a);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use textmanip_core::datagen::{DatasetRecord, Label};

    #[test]
    fn empty_input() {
        assert!(read_jsonl::<DatasetRecord, _>(&b""[..]).unwrap().is_empty());
    }

    #[test]
    fn truncated_line_is_located() {
        let good = r#"{"id":"a#h","source_id":"a","text":"x","label":"human","records":[],"split":"train"}"#;
        let input = format!("{good}\n{}\n", &good[..30]);
        let err = read_jsonl::<DatasetRecord, _>(input.as_bytes()).unwrap_err();
        assert_eq!(err.line(), Some(2));
        let ok = read_jsonl::<DatasetRecord, _>(format!("{good}\n\n{good}\n").as_bytes()).unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok[0].label, Label::Human);
    }

    #[test]
    fn articles_are_validated() {
        let line = |title: &str| {
            format!(
                r#"{{"newspaper_name_ar":"","newspaper_name_en":"x","country":"EG","newspaper_link":"","title":"{title}","content":"نص","url":"u","date":"2020","topic":"Sports"}}"#
            )
        };
        let ok = read_articles(format!("{}\n", line("عنوان")).as_bytes()).unwrap();
        assert_eq!(ok[0].summary, None);
        let err = read_articles(format!("{}\n{}\n", line("a"), line(" ")).as_bytes()).unwrap_err();
        assert_eq!(err.line(), Some(2));
    }
}
