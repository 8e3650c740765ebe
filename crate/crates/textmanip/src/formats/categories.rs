//! Category maps: `raw<TAB>canonical` per line, `#` comments.

use std::io::BufRead;

use textmanip_core::{Category, CategoryMap};

use super::{numbered_lines, FormatError};

pub fn load_category_map<R: BufRead>(r: R) -> Result<CategoryMap, FormatError> {
    let mut pairs = Vec::new();
    for item in numbered_lines(r) {
        let (n, line) = item?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (raw, canonical) =
            line.split_once('\t').ok_or_else(|| FormatError::at(n, "expected `raw<TAB>canonical`"))?;
        canonical.trim().parse::<Category>().map_err(|e| FormatError::at(n, e))?;
        pairs.push((raw.trim().to_string(), canonical.trim().to_string()));
    }
    // Every target was checked above.
    CategoryMap::from_entries(pairs.iter().map(|(a, b)| (a.as_str(), b.as_str()))).map_err(|e| FormatError::at(0, e))
}
