//! Delimited numeric tables: one column per channel, one row per sample.
//!
//! Whitespace or comma separated (auto-detected per file unless given), `#`
//! comment lines and blank lines ignored, an optional header row when the
//! first row is not numeric.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::Recording;
use crate::signals::MultichannelSignal;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TextOptions {
    /// `None` picks comma when the first data line has one, whitespace otherwise.
    pub delimiter: Option<char>,
    /// Leading columns to drop (e.g. a time column).
    pub skip_columns: usize,
    pub max_samples: Option<usize>,
}

pub fn read_matrix_text(path: impl AsRef<Path>, options: &TextOptions) -> Result<Recording> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_text(&text, options)
}

fn split(line: &str, delim: Option<char>) -> Vec<&str> {
    match delim {
        Some(c) if !c.is_whitespace() => line.split(c).map(str::trim).collect(),
        _ => line.split_whitespace().collect(),
    }
}

fn parse_number(tok: &str) -> Option<f64> {
    // reject inf/nan spellings that str::parse would accept
    if !tok.bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    tok.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn parse_matrix_text(text: &str, options: &TextOptions) -> Result<Recording> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .peekable();

    let delim = options.delimiter.or_else(|| {
        lines
            .peek()
            .map(|(_, l)| if l.contains(',') { ',' } else { ' ' })
    });

    let mut labels: Option<Vec<String>> = None;
    if let Some((_, first)) = lines.peek() {
        let toks = split(first, delim);
        if toks
            .iter()
            .skip(options.skip_columns)
            .any(|t| parse_number(t).is_none())
        {
            labels = Some(
                toks.iter()
                    .skip(options.skip_columns)
                    .map(|t| t.trim_matches('"').to_string())
                    .collect(),
            );
            lines.next();
        }
    }

    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for (line_no, line) in lines {
        if options.max_samples.is_some_and(|m| rows >= m) {
            break;
        }
        let toks = split(line, delim);
        let expected = *width.get_or_insert(toks.len());
        if toks.len() != expected {
            return Err(Error::RaggedRows {
                line: line_no,
                expected,
                found: toks.len(),
            });
        }
        if columns.is_empty() {
            if expected <= options.skip_columns {
                return Err(Error::RaggedRows {
                    line: line_no,
                    expected: options.skip_columns + 1,
                    found: expected,
                });
            }
            columns = vec![Vec::new(); expected - options.skip_columns];
        }
        for (k, tok) in toks.iter().enumerate().skip(options.skip_columns) {
            let v = parse_number(tok).ok_or_else(|| Error::Parse {
                line: line_no,
                column: k + 1,
                token: tok.to_string(),
            })?;
            columns[k - options.skip_columns].push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::DimensionMismatch("table has no data rows".into()));
    }
    let signal = MultichannelSignal::new(columns)?;
    match labels {
        Some(l) if l.len() == signal.n_channels() => Recording::new(signal, l, None),
        Some(l) => Err(Error::RaggedRows {
            line: 1,
            expected: signal.n_channels(),
            found: l.len(),
        }),
        None => Ok(Recording::with_default_labels(signal)),
    }
}

/// Fixed 17-significant-digit scientific notation; round-trips exactly.
pub fn format_f64(x: f64) -> String {
    // normalize -0 so output does not depend on rounding direction
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// Comma-separated table with a label header row.
pub fn to_delimited_text(labels: &[String], channels: &[Vec<f64>]) -> String {
    let mut out = String::new();
    out.push_str(&labels.join(","));
    out.push('\n');
    let m = channels.first().map_or(0, Vec::len);
    for n in 0..m {
        for (i, ch) in channels.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", format_f64(ch[n]));
        }
        out.push('\n');
    }
    out
}

pub fn recording_to_text(rec: &Recording) -> String {
    to_delimited_text(&rec.labels, rec.signal.channels())
}
