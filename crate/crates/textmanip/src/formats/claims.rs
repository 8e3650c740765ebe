//! Claim files: `label<TAB>text` per line with labels `true` or `fake`.

use std::io::{self, BufRead, Write};

use textmanip_core::detect::ClaimRecord;

use super::{numbered_lines, FormatError};

pub fn load_claims<R: BufRead>(r: R) -> Result<Vec<ClaimRecord>, FormatError> {
    let mut out = Vec::new();
    for item in numbered_lines(r) {
        let (n, line) = item?;
        if line.trim().is_empty() {
            continue;
        }
        let (label, text) = line.split_once('\t').ok_or_else(|| FormatError::at(n, "expected `label<TAB>text`"))?;
        let label = label.trim().parse().map_err(|e| FormatError::at(n, e))?;
        out.push(ClaimRecord::new(text.trim(), label).map_err(|e| FormatError::at(n, e))?);
    }
    Ok(out)
}

pub fn write_claims<W: Write + ?Sized>(w: &mut W, claims: &[ClaimRecord]) -> io::Result<()> {
    for c in claims {
        // Tabs and newlines inside the text would break the layout.
        let text: String = c.text.chars().map(|ch| if matches!(ch, '\t' | '\n' | '\r') { ' ' } else { ch }).collect();
        writeln!(w, "{}\t{}", c.label.as_str(), text)?;
    }
    Ok(())
}
