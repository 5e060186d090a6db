//! Point files: one ternary string per line, `#` comments and blank lines
//! ignored, dimension taken from the first record.

use std::fmt::Write as _;
use std::path::Path;

use capsearch::space::{CapSet, Point};

use crate::CliError;

pub fn parse(text: &str, origin: &str) -> Result<CapSet, CliError> {
    let bad = |line: usize, msg: String| CliError::Format(format!("{origin}:{line}: {msg}"));
    let mut dim = None;
    let mut points = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let n = *dim.get_or_insert(line.len());
        if line.len() != n {
            return Err(bad(
                i + 1,
                format!("expected {n} characters, found {}", line.len()),
            ));
        }
        let p: Point = line.parse().map_err(|e| bad(i + 1, format!("{e}")))?;
        if !seen.insert(p.code()) {
            return Err(bad(i + 1, format!("duplicate point {line}")));
        }
        points.push(p);
    }
    let dim = dim.ok_or_else(|| CliError::Format(format!("{origin}: no points")))?;
    CapSet::new(dim, points).map_err(|e| CliError::Format(format!("{origin}: {e}")))
}

pub fn read(path: &Path) -> Result<CapSet, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}

/// Canonical form: sorted, one point per line, trailing newline.
pub fn render(s: &CapSet) -> String {
    let mut out = String::with_capacity(s.len() * (s.dim() + 1));
    for p in s {
        writeln!(out, "{p}").expect("writing to a string");
    }
    out
}
