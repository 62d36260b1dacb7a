//! Shared helpers for the plain-text resource files (TSV tables and word lists).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Reads a UTF-8 file and yields `(line_number, line)` for every non-blank line
/// that is not a `#` comment. Line numbers are 1-based.
pub(crate) fn content_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                None
            } else {
                Some((i + 1, line.to_string()))
            }
        })
        .collect())
}

/// Splits a TSV line into exactly `n` fields.
pub(crate) fn fields<'a>(path: &Path, line_no: usize, line: &'a str, n: usize) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = line.split('\t').collect();
    if parts.len() != n {
        return Err(Error::parse(
            path,
            line_no,
            format!("expected {n} tab-separated fields, found {}", parts.len()),
        ));
    }
    if parts.iter().any(|p| p.trim().is_empty()) {
        return Err(Error::parse(path, line_no, "empty field"));
    }
    Ok(parts.into_iter().map(str::trim).collect())
}

/// Reads a one-word-per-line list, lowercased.
pub(crate) fn word_list(path: &Path) -> Result<Vec<String>> {
    Ok(content_lines(path)?
        .into_iter()
        .map(|(_, w)| w.trim().to_lowercase())
        .collect())
}
