//! Loading recorded multichannel data.
//!
//! Channel indices are 1-based at this boundary (lead numbering); sample
//! ranges are ordinary 0-based half-open ranges.

pub mod edf;
pub mod text;

use std::ops::Range;

use crate::error::{Error, Result};
use crate::signals::MultichannelSignal;

pub use edf::{read_edf, ChannelSelection, EdfHeader, EdfOptions, EdfSignalHeader};
pub use text::{parse_matrix_text, read_matrix_text, TextOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub signal: MultichannelSignal,
    pub labels: Vec<String>,
    /// Hz; unknown for plain text tables.
    pub sample_rate: Option<f64>,
}

impl Recording {
    pub fn new(
        signal: MultichannelSignal,
        labels: Vec<String>,
        sample_rate: Option<f64>,
    ) -> Result<Self> {
        if labels.len() != signal.n_channels() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} channels",
                labels.len(),
                signal.n_channels()
            )));
        }
        Ok(Recording {
            signal,
            labels,
            sample_rate,
        })
    }

    pub fn with_default_labels(signal: MultichannelSignal) -> Self {
        let labels = (1..=signal.n_channels())
            .map(|i| format!("ch{i}"))
            .collect();
        Recording {
            signal,
            labels,
            sample_rate: None,
        }
    }
}

/// Parses a 1-based channel list such as `"2-5"`, `"1,3,4"` or `"1-2,7"`.
pub fn parse_channel_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Error::Config(format!("bad channel list entry {part:?}"));
        match part.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if a == 0 || b < a {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => {
                let a: usize = part.parse().map_err(|_| bad())?;
                if a == 0 {
                    return Err(bad());
                }
                out.push(a);
            }
        }
    }
    Ok(out)
}

/// Sub-recording with 1-based `channels` (in the given order) over `samples`.
pub fn select(rec: &Recording, channels: &[usize], samples: Range<usize>) -> Result<Recording> {
    let n = rec.signal.n_channels();
    let m = rec.signal.n_samples();
    if channels.is_empty() {
        return Err(Error::OutOfBounds("empty channel selection".into()));
    }
    if let Some(c) = channels.iter().find(|&&c| c == 0 || c > n) {
        return Err(Error::OutOfBounds(format!("channel {c} not in 1..={n}")));
    }
    if samples.start >= samples.end || samples.end > m {
        return Err(Error::OutOfBounds(format!(
            "sample range {}..{} not within 0..{m}",
            samples.start, samples.end
        )));
    }
    let signal = MultichannelSignal::new(
        channels
            .iter()
            .map(|&c| rec.signal.channel(c - 1)[samples.clone()].to_vec())
            .collect(),
    )?;
    let labels = channels
        .iter()
        .map(|&c| rec.labels[c - 1].clone())
        .collect();
    Recording::new(signal, labels, rec.sample_rate)
}
