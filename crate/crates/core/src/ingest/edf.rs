//! Minimal EDF reader (and a matching encoder used to build fixtures).
//!
//! Layout: a 256-byte fixed ASCII header, then 256 bytes of per-signal header
//! fields stored field-major (all labels, then all transducers, ...), then
//! `n_records` data records. Each record holds `samples_per_record[i]`
//! little-endian `i16` samples for signal 0, then signal 1, and so on.
//!
//! EDF+ files are accepted when continuous (`EDF+C`); annotation signals are
//! skipped by default and refused when selected explicitly. Discontinuous
//! recordings and BDF are refused.

use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::Recording;
use crate::signals::MultichannelSignal;

pub const ANNOTATION_LABEL: &str = "EDF Annotations";

const FIXED_HEADER: usize = 256;
const SIGNAL_HEADER: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct EdfSignalHeader {
    pub label: String,
    pub transducer: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefiltering: String,
    pub samples_per_record: usize,
}

impl EdfSignalHeader {
    pub fn is_annotation(&self) -> bool {
        self.label == ANNOTATION_LABEL
    }

    /// `(d − dmin)·(pmax − pmin)/(dmax − dmin) + pmin`
    pub fn to_physical(&self, d: i16) -> f64 {
        let gain = (self.physical_max - self.physical_min)
            / f64::from(self.digital_max - self.digital_min);
        (f64::from(d) - f64::from(self.digital_min)) * gain + self.physical_min
    }

    /// Nearest digital code for a physical value, clamped to the digital range.
    pub fn to_digital(&self, v: f64) -> i16 {
        let gain = f64::from(self.digital_max - self.digital_min)
            / (self.physical_max - self.physical_min);
        let d = ((v - self.physical_min) * gain + f64::from(self.digital_min)).round();
        d.clamp(f64::from(self.digital_min), f64::from(self.digital_max)) as i16
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdfHeader {
    pub version: String,
    pub patient_id: String,
    pub recording_id: String,
    pub start_date: String,
    pub start_time: String,
    pub header_bytes: usize,
    /// `EDF+C` / `EDF+D` for EDF+, blank for plain EDF.
    pub reserved: String,
    pub n_records: usize,
    /// Seconds per data record.
    pub record_duration: f64,
    pub signals: Vec<EdfSignalHeader>,
}

impl EdfHeader {
    pub fn n_signals(&self) -> usize {
        self.signals.len()
    }

    pub fn record_bytes(&self) -> usize {
        2 * self
            .signals
            .iter()
            .map(|s| s.samples_per_record)
            .sum::<usize>()
    }

    pub fn is_edf_plus(&self) -> bool {
        self.reserved.starts_with("EDF+")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub enum ChannelSelection {
    /// Every ordinary signal; annotation signals are left out.
    #[default]
    All,
    /// 1-based signal numbers, in output order.
    Indices(Vec<usize>),
    Labels(Vec<String>),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EdfOptions {
    pub channels: ChannelSelection,
    pub max_samples: Option<usize>,
}

fn malformed(field: &str, detail: impl Into<String>) -> Error {
    Error::MalformedHeader {
        field: field.to_string(),
        detail: detail.into(),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize, field: &str) -> Result<&'a str> {
        let end = self.pos + len;
        let raw = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| malformed(field, "header ends early"))?;
        self.pos = end;
        if !raw.iter().all(|b| (0x20..0x7f).contains(b)) {
            return Err(malformed(field, "non-printable ASCII"));
        }
        Ok(std::str::from_utf8(raw).expect("ascii").trim())
    }

    fn take_num<T: std::str::FromStr>(&mut self, len: usize, field: &str) -> Result<T> {
        let s = self.take(len, field)?;
        s.parse()
            .map_err(|_| malformed(field, format!("not a number: {s:?}")))
    }
}

pub fn parse_header(bytes: &[u8]) -> Result<EdfHeader> {
    if bytes.first() == Some(&0xff) {
        return Err(Error::UnsupportedFeature("BDF (24-bit) files".into()));
    }
    if bytes.len() < FIXED_HEADER {
        return Err(malformed(
            "header",
            format!("{} bytes, need 256", bytes.len()),
        ));
    }
    let mut c = Cursor { bytes, pos: 0 };
    let version = c.take(8, "version")?.to_string();
    if version != "0" {
        return Err(malformed(
            "version",
            format!("expected \"0\", found {version:?}"),
        ));
    }
    let patient_id = c.take(80, "patient")?.to_string();
    let recording_id = c.take(80, "recording")?.to_string();
    let start_date = c.take(8, "startdate")?.to_string();
    let start_time = c.take(8, "starttime")?.to_string();
    let header_bytes: usize = c.take_num(8, "header bytes")?;
    let reserved = c.take(44, "reserved")?.to_string();
    let n_records: i64 = c.take_num(8, "number of data records")?;
    let record_duration: f64 = c.take_num(8, "duration of a data record")?;
    let ns: usize = c.take_num(4, "number of signals")?;

    if n_records < 0 {
        return Err(malformed(
            "number of data records",
            format!("{n_records} (unknown length)"),
        ));
    }
    if !(record_duration >= 0.0 && record_duration.is_finite()) {
        return Err(malformed(
            "duration of a data record",
            record_duration.to_string(),
        ));
    }
    if ns == 0 {
        return Err(malformed("number of signals", "zero signals"));
    }
    if header_bytes != FIXED_HEADER + SIGNAL_HEADER * ns {
        return Err(malformed(
            "header bytes",
            format!(
                "{header_bytes}, expected {}",
                FIXED_HEADER + SIGNAL_HEADER * ns
            ),
        ));
    }
    if reserved.starts_with("EDF+D") {
        return Err(Error::UnsupportedFeature(
            "discontinuous EDF+ recordings".into(),
        ));
    }
    if bytes.len() < header_bytes {
        return Err(malformed("signal headers", "header ends early"));
    }

    fn column<T>(
        c: &mut Cursor<'_>,
        ns: usize,
        mut f: impl FnMut(&mut Cursor<'_>) -> Result<T>,
    ) -> Result<Vec<T>> {
        (0..ns).map(|_| f(c)).collect()
    }
    let labels = column(&mut c, ns, |c| c.take(16, "label").map(String::from))?;
    let transducers = column(&mut c, ns, |c| {
        c.take(80, "transducer type").map(String::from)
    })?;
    let dims = column(&mut c, ns, |c| {
        c.take(8, "physical dimension").map(String::from)
    })?;
    let pmin = column(&mut c, ns, |c| c.take_num::<f64>(8, "physical minimum"))?;
    let pmax = column(&mut c, ns, |c| c.take_num::<f64>(8, "physical maximum"))?;
    let dmin = column(&mut c, ns, |c| c.take_num::<i32>(8, "digital minimum"))?;
    let dmax = column(&mut c, ns, |c| c.take_num::<i32>(8, "digital maximum"))?;
    let prefilter = column(&mut c, ns, |c| c.take(80, "prefiltering").map(String::from))?;
    let spr = column(&mut c, ns, |c| {
        c.take_num::<usize>(8, "number of samples in each data record")
    })?;
    column(&mut c, ns, |c| c.take(32, "signal reserved").map(|_| ()))?;

    let mut signals = Vec::with_capacity(ns);
    for i in 0..ns {
        let s = EdfSignalHeader {
            label: labels[i].clone(),
            transducer: transducers[i].clone(),
            physical_dimension: dims[i].clone(),
            physical_min: pmin[i],
            physical_max: pmax[i],
            digital_min: dmin[i],
            digital_max: dmax[i],
            prefiltering: prefilter[i].clone(),
            samples_per_record: spr[i],
        };
        if s.digital_max <= s.digital_min {
            return Err(malformed(
                "digital maximum",
                format!(
                    "signal {}: max {} <= min {}",
                    i + 1,
                    s.digital_max,
                    s.digital_min
                ),
            ));
        }
        if s.digital_min < i32::from(i16::MIN) || s.digital_max > i32::from(i16::MAX) {
            return Err(malformed(
                "digital minimum",
                format!("signal {}: outside 16-bit range", i + 1),
            ));
        }
        if !(s.physical_min.is_finite() && s.physical_max.is_finite())
            || s.physical_min == s.physical_max
        {
            return Err(malformed(
                "physical maximum",
                format!("signal {}: empty physical range", i + 1),
            ));
        }
        if s.samples_per_record == 0 {
            return Err(malformed(
                "number of samples in each data record",
                format!("signal {}: zero", i + 1),
            ));
        }
        signals.push(s);
    }
    Ok(EdfHeader {
        version,
        patient_id,
        recording_id,
        start_date,
        start_time,
        header_bytes,
        reserved,
        n_records: n_records as usize,
        record_duration,
        signals,
    })
}

pub fn read_edf(path: impl AsRef<Path>, options: &EdfOptions) -> Result<Recording> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_edf(&bytes, options)
}

fn resolve_selection(header: &EdfHeader, sel: &ChannelSelection) -> Result<Vec<usize>> {
    let ns = header.n_signals();
    let picked: Vec<usize> = match sel {
        ChannelSelection::All => (0..ns)
            .filter(|&i| !header.signals[i].is_annotation())
            .collect(),
        ChannelSelection::Indices(idx) => idx
            .iter()
            .map(|&k| {
                if k == 0 || k > ns {
                    Err(Error::OutOfBounds(format!("signal {k} not in 1..={ns}")))
                } else {
                    Ok(k - 1)
                }
            })
            .collect::<Result<_>>()?,
        ChannelSelection::Labels(labels) => labels
            .iter()
            .map(|l| {
                header
                    .signals
                    .iter()
                    .position(|s| s.label == l.trim())
                    .ok_or_else(|| Error::OutOfBounds(format!("no signal labelled {l:?}")))
            })
            .collect::<Result<_>>()?,
    };
    if picked.is_empty() {
        return Err(Error::OutOfBounds("no signals selected".into()));
    }
    if let Some(&k) = picked.iter().find(|&&k| header.signals[k].is_annotation()) {
        return Err(Error::UnsupportedFeature(format!(
            "signal {} is an EDF+ annotation channel",
            k + 1
        )));
    }
    let spr = header.signals[picked[0]].samples_per_record;
    if picked
        .iter()
        .any(|&k| header.signals[k].samples_per_record != spr)
    {
        return Err(Error::UnsupportedFeature(
            "selected signals have different sample rates".into(),
        ));
    }
    Ok(picked)
}

pub fn decode_edf(bytes: &[u8], options: &EdfOptions) -> Result<Recording> {
    let header = parse_header(bytes)?;
    let picked = resolve_selection(&header, &options.channels)?;

    let expected = (header.header_bytes + header.n_records * header.record_bytes()) as u64;
    if (bytes.len() as u64) < expected {
        return Err(Error::TruncatedData {
            expected,
            found: bytes.len() as u64,
        });
    }

    // byte offset of each signal inside a record
    let mut offsets = Vec::with_capacity(header.n_signals());
    let mut acc = 0;
    for s in &header.signals {
        offsets.push(acc);
        acc += 2 * s.samples_per_record;
    }
    let spr = header.signals[picked[0]].samples_per_record;
    let total = header.n_records * spr;
    let m = options.max_samples.map_or(total, |x| x.min(total));
    if m == 0 {
        return Err(Error::TruncatedData {
            expected: expected + 1,
            found: bytes.len() as u64,
        });
    }

    let record_bytes = header.record_bytes();
    let channels = picked
        .iter()
        .map(|&k| {
            let sh = &header.signals[k];
            (0..m)
                .map(|n| {
                    let (rec, idx) = (n / spr, n % spr);
                    let at = header.header_bytes + rec * record_bytes + offsets[k] + 2 * idx;
                    sh.to_physical(i16::from_le_bytes([bytes[at], bytes[at + 1]]))
                })
                .collect()
        })
        .collect();
    let signal = MultichannelSignal::new(channels)?;
    let labels = picked
        .iter()
        .map(|&k| header.signals[k].label.clone())
        .collect();
    let sample_rate = (header.record_duration > 0.0).then(|| spr as f64 / header.record_duration);
    Recording::new(signal, labels, sample_rate)
}

fn put(out: &mut Vec<u8>, value: &str, width: usize, field: &str) -> Result<()> {
    if value.len() > width || !value.is_ascii() {
        return Err(malformed(
            field,
            format!("{value:?} does not fit in {width} ASCII bytes"),
        ));
    }
    out.extend_from_slice(value.as_bytes());
    out.extend(std::iter::repeat_n(b' ', width - value.len()));
    Ok(())
}

fn num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e7 {
        format!("{}", v as i64)
    } else {
        let s = format!("{v}");
        if s.len() <= 8 {
            s
        } else {
            // shortest form that fits 8 chars
            (0..=6)
                .rev()
                .map(|p| format!("{v:.p$}"))
                .find(|s| s.len() <= 8)
                .unwrap_or(s)
        }
    }
}

/// Encodes a header plus digital samples (`digital[i]` holds
/// `n_records × samples_per_record[i]` values for signal `i`).
///
/// `header_bytes` is recomputed from the signal count.
pub fn encode_edf(header: &EdfHeader, digital: &[Vec<i16>]) -> Result<Vec<u8>> {
    let ns = header.n_signals();
    if digital.len() != ns {
        return Err(Error::DimensionMismatch(format!(
            "{} sample arrays for {ns} signals",
            digital.len()
        )));
    }
    for (s, d) in header.signals.iter().zip(digital) {
        if d.len() != header.n_records * s.samples_per_record {
            return Err(Error::DimensionMismatch(format!(
                "signal {:?} has {} samples, expected {}",
                s.label,
                d.len(),
                header.n_records * s.samples_per_record
            )));
        }
    }
    let header_bytes = FIXED_HEADER + SIGNAL_HEADER * ns;
    let mut out = Vec::with_capacity(header_bytes + header.n_records * header.record_bytes());
    put(&mut out, &header.version, 8, "version")?;
    put(&mut out, &header.patient_id, 80, "patient")?;
    put(&mut out, &header.recording_id, 80, "recording")?;
    put(&mut out, &header.start_date, 8, "startdate")?;
    put(&mut out, &header.start_time, 8, "starttime")?;
    put(&mut out, &header_bytes.to_string(), 8, "header bytes")?;
    put(&mut out, &header.reserved, 44, "reserved")?;
    put(
        &mut out,
        &header.n_records.to_string(),
        8,
        "number of data records",
    )?;
    put(
        &mut out,
        &num(header.record_duration),
        8,
        "duration of a data record",
    )?;
    put(&mut out, &ns.to_string(), 4, "number of signals")?;
    let sig = &header.signals;
    for s in sig {
        put(&mut out, &s.label, 16, "label")?;
    }
    for s in sig {
        put(&mut out, &s.transducer, 80, "transducer type")?;
    }
    for s in sig {
        put(&mut out, &s.physical_dimension, 8, "physical dimension")?;
    }
    for s in sig {
        put(&mut out, &num(s.physical_min), 8, "physical minimum")?;
    }
    for s in sig {
        put(&mut out, &num(s.physical_max), 8, "physical maximum")?;
    }
    for s in sig {
        put(&mut out, &s.digital_min.to_string(), 8, "digital minimum")?;
    }
    for s in sig {
        put(&mut out, &s.digital_max.to_string(), 8, "digital maximum")?;
    }
    for s in sig {
        put(&mut out, &s.prefiltering, 80, "prefiltering")?;
    }
    for s in sig {
        put(
            &mut out,
            &s.samples_per_record.to_string(),
            8,
            "number of samples in each data record",
        )?;
    }
    for _ in sig {
        put(&mut out, "", 32, "signal reserved")?;
    }
    for r in 0..header.n_records {
        for (s, d) in sig.iter().zip(digital) {
            let spr = s.samples_per_record;
            for v in &d[r * spr..(r + 1) * spr] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn write_edf(path: impl AsRef<Path>, header: &EdfHeader, digital: &[Vec<i16>]) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_edf(header, digital)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// A plain header with `labels.len()` signals sharing one scaling.
pub fn simple_header(
    labels: &[&str],
    samples_per_record: usize,
    n_records: usize,
    physical: (f64, f64),
    digital: (i32, i32),
) -> EdfHeader {
    EdfHeader {
        version: "0".into(),
        patient_id: "X X X X".into(),
        recording_id: "Startdate X X X X".into(),
        start_date: "01.01.00".into(),
        start_time: "00.00.00".into(),
        header_bytes: FIXED_HEADER + SIGNAL_HEADER * labels.len(),
        reserved: String::new(),
        n_records,
        record_duration: 1.0,
        signals: labels
            .iter()
            .map(|l| EdfSignalHeader {
                label: (*l).to_string(),
                transducer: String::new(),
                physical_dimension: "uV".into(),
                physical_min: physical.0,
                physical_max: physical.1,
                digital_min: digital.0,
                digital_max: digital.1,
                prefiltering: String::new(),
                samples_per_record,
            })
            .collect(),
    }
}
