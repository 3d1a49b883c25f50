//! Single-column CSV input (`y` header) and output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::CliError;

/// Parses a CSV document whose header is exactly `y`. Blank rows,
/// non-numeric and non-finite values are rejected with their 1-based line
/// number.
pub fn parse_series(text: &str) -> Result<Vec<f64>, CliError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((i, l)) => break (i, l),
            None => return Err(CliError::input("empty input: no header row")),
        }
    };
    let name = header
        .1
        .trim()
        .trim_start_matches('\u{feff}')
        .trim_matches('"');
    if name != "y" {
        return Err(CliError::input(format!(
            "line {}: expected a single column with header `y`, found `{}`",
            header.0 + 1,
            header.1.trim()
        )));
    }
    let body: Vec<(usize, &str)> = lines.collect();
    // a single trailing newline leaves no entry; trailing blank lines are tolerated
    let last = body
        .iter()
        .rposition(|(_, l)| !l.trim().is_empty())
        .map_or(0, |p| p + 1);
    let mut values = Vec::with_capacity(last);
    let mut problems = Vec::new();
    for &(i, line) in &body[..last] {
        let field = line.trim().trim_matches('"');
        if field.is_empty() {
            problems.push(format!("line {}: blank row", i + 1));
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ => problems.push(format!(
                "line {}: not a finite decimal number: `{field}`",
                i + 1
            )),
        }
    }
    if !problems.is_empty() {
        let shown: Vec<_> = problems.iter().take(10).cloned().collect();
        let more = problems.len().saturating_sub(shown.len());
        let mut msg = shown.join("; ");
        if more > 0 {
            let _ = write!(msg, "; ... and {more} more");
        }
        return Err(CliError::input(msg));
    }
    if values.is_empty() {
        return Err(CliError::input("empty input: no data rows"));
    }
    Ok(values)
}

pub fn read_series(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    parse_series(&text)
}

pub fn format_series(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 20 + 2);
    out.push_str("y\n");
    for v in values {
        let _ = writeln!(out, "{v}");
    }
    out
}
