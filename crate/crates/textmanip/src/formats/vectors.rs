//! Word vectors in the fastText `.vec` text layout: a `count dim` header
//! followed by `token v1 … v_dim` rows.

use std::io::{self, BufRead, Write};

use textmanip_core::{EmbeddingIndex, Warning};

use super::{numbered_lines, FormatError};

pub fn load_vectors<R: BufRead>(r: R) -> Result<(EmbeddingIndex, Vec<Warning>), FormatError> {
    let mut lines = numbered_lines(r);
    let (n, header) = lines.next().transpose()?.ok_or_else(|| FormatError::at(1, "missing `count dim` header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (count, dim) = match fields[..] {
        [c, d] => match (c.parse::<usize>(), d.parse::<usize>()) {
            (Ok(c), Ok(d)) => (c, d),
            _ => return Err(FormatError::at(n, "header must be two integers `count dim`")),
        },
        _ => return Err(FormatError::at(n, "header must be two integers `count dim`")),
    };
    let mut builder = EmbeddingIndex::builder(dim).map_err(|e| FormatError::at(n, e))?;
    let mut rows = 0;
    let mut buf = Vec::with_capacity(dim);
    for item in lines {
        let (n, line) = item?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().unwrap_or_default();
        buf.clear();
        for p in parts {
            let v: f32 = p.parse().map_err(|_| FormatError::at(n, format!("`{p}` is not a number")))?;
            buf.push(v);
        }
        builder.push(token, &buf).map_err(|e| FormatError::at(n, e))?;
        rows += 1;
    }
    if rows != count {
        return Err(FormatError::at(1, format!("header declares {count} rows but the file has {rows}")));
    }
    Ok(builder.finish())
}

/// Writes rows in index order. Components use the shortest text that
/// parses back to the same `f32`, so loading the output is lossless.
pub fn write_vectors<W: Write + ?Sized>(w: &mut W, index: &EmbeddingIndex) -> io::Result<()> {
    writeln!(w, "{} {}", index.len(), index.dim())?;
    for (token, v) in index.rows() {
        write!(w, "{token}")?;
        for x in v {
            write!(w, " {x}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(s: &str) -> Result<(EmbeddingIndex, Vec<Warning>), FormatError> {
        load_vectors(s.as_bytes())
    }

    #[test]
    fn small_file() {
        let (idx, warnings) = load("2 3\na 1 0 0\nb 0 1 0\n").unwrap();
        assert_eq!((idx.len(), idx.dim()), (2, 3));
        assert!(warnings.is_empty());
        assert_eq!(idx.vector("b"), Some(&[0.0, 1.0, 0.0][..]));
    }

    #[test]
    fn trailing_spaces_are_tolerated() {
        let (idx, _) = load("1 2\nx 0.5 -0.25 \n").unwrap();
        assert_eq!(idx.vector("x"), Some(&[0.5, -0.25][..]));
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(load("2 3\na 1 0 0\nb 0 1\n").unwrap_err().line(), Some(3));
        assert_eq!(load("1 2\na 1 x\n").unwrap_err().line(), Some(2));
        assert_eq!(load("1 2\na 1 NaN\n").unwrap_err().line(), Some(2));
        assert_eq!(load("two 3\n").unwrap_err().line(), Some(1));
        assert_eq!(load("3 2\na 1 0\n").unwrap_err().line(), Some(1));
        assert!(load("").is_err());
    }

    #[test]
    fn duplicates_keep_first() {
        let (idx, warnings) = load("3 2\na 1 0\na 0 1\nb 1 1\n").unwrap();
        assert_eq!(idx.len(), 2);
        assert_eq!(warnings.len(), 1);
        assert_eq!(idx.vector("a"), Some(&[1.0, 0.0][..]));
    }

    #[test]
    fn round_trip_is_identical() {
        let (idx, _) = load("3 4\nقال 0.1 -0.2 1e-7 3.4028235e38\nب 0.333333 0 -0 7\nc 1 2 3 4\n").unwrap();
        let mut buf = Vec::new();
        write_vectors(&mut buf, &idx).unwrap();
        let (again, _) = load_vectors(buf.as_slice()).unwrap();
        assert_eq!(idx, again);
    }
}
