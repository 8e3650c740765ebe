//! Two-column POS corpora: `surface<TAB>tag` per line, a blank line after
//! each sentence, `#` comments.
//!
//! A `# sent_id = X` comment names the sentence that follows. Unnamed
//! sentences get `s000001`, `s000002`, … by position.

use std::io::{self, BufRead, Write};

use textmanip_core::{Sentence, Token};

use super::{numbered_lines, FormatError};

const ID_PREFIX: &str = "sent_id";

fn flush(
    out: &mut Vec<Sentence>,
    tokens: &mut Vec<Token>,
    id: &mut Option<String>,
    line: usize,
) -> Result<(), FormatError> {
    if tokens.is_empty() {
        return Ok(());
    }
    let name = id.take().unwrap_or_else(|| format!("s{:06}", out.len() + 1));
    let s = Sentence::new(name, std::mem::take(tokens)).map_err(|e| FormatError::at(line, e))?;
    out.push(s);
    Ok(())
}

fn sentence_id(comment: &str) -> Option<String> {
    let rest = comment.trim_start_matches('#').trim_start().strip_prefix(ID_PREFIX)?;
    let value = rest.trim_start().strip_prefix('=')?.trim();
    (!value.is_empty()).then(|| value.to_string())
}

pub fn parse_pos_corpus<R: BufRead>(r: R) -> Result<Vec<Sentence>, FormatError> {
    let mut out = Vec::new();
    let mut tokens = Vec::new();
    let mut id = None;
    let mut last = 0;
    for item in numbered_lines(r) {
        let (n, line) = item?;
        last = n;
        if line.trim().is_empty() {
            flush(&mut out, &mut tokens, &mut id, n)?;
            continue;
        }
        if line.starts_with('#') {
            if let Some(name) = sentence_id(&line) {
                flush(&mut out, &mut tokens, &mut id, n)?;
                id = Some(name);
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [surface, tag] = cols[..] else {
            return Err(FormatError::at(n, format!("expected 2 tab-separated columns, found {}", cols.len())));
        };
        let tok = Token::new(surface.trim(), tag.trim()).map_err(|e| FormatError::at(n, e))?;
        tokens.push(tok);
    }
    flush(&mut out, &mut tokens, &mut id, last)?;
    Ok(out)
}

pub fn parse_pos_str(s: &str) -> Result<Vec<Sentence>, FormatError> {
    parse_pos_corpus(s.as_bytes())
}

pub fn write_pos_corpus<W: Write + ?Sized>(w: &mut W, sentences: &[Sentence]) -> io::Result<()> {
    for s in sentences {
        writeln!(w, "# {ID_PREFIX} = {}", s.id)?;
        for t in s.tokens() {
            writeln!(w, "{}\t{}", t.surface(), t.pos())?;
        }
        writeln!(w)?;
    }
    Ok(())
}
