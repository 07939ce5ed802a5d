//! Signal file formats.
//!
//! CSV: first line `#META {json}`, then one decimal amplitude per line.
//! Binary: one or more records, each `VIBS1`, little-endian `u32` metadata
//! length, metadata JSON, little-endian `u64` sample count, then raw
//! little-endian `f64` samples.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EmotionLabel, SignalMeta, VibrationSignal};
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 5] = b"VIBS1";
const CSV_PREFIX: &str = "#META ";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalFormat {
    Csv,
    Binary,
}

impl SignalFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => SignalFormat::Csv,
            _ => SignalFormat::Binary,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaRecord {
    sample_rate_hz: f64,
    #[serde(default)]
    person_id: String,
    #[serde(default)]
    trajectory_id: String,
    #[serde(default)]
    sensor_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    valence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arousal: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    events_s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    peak_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fingerprint: Option<String>,
}

impl From<&SignalMeta> for MetaRecord {
    fn from(m: &SignalMeta) -> Self {
        Self {
            sample_rate_hz: m.sample_rate_hz,
            person_id: m.person_id.clone(),
            trajectory_id: m.trajectory_id.clone(),
            sensor_id: m.sensor_id.clone(),
            valence: m.label.map(|l| l.valence()),
            arousal: m.label.map(|l| l.arousal()),
            events_s: m.events_s.clone(),
            peak_index: m.peak_index,
            fingerprint: m.fingerprint.clone(),
        }
    }
}

impl MetaRecord {
    fn into_meta(self) -> std::result::Result<SignalMeta, String> {
        let label = match (self.valence, self.arousal) {
            (Some(v), Some(a)) => Some(EmotionLabel::new(v, a).map_err(|e| e.to_string())?),
            (None, None) => None,
            _ => return Err("valence and arousal must be given together".into()),
        };
        Ok(SignalMeta {
            sample_rate_hz: self.sample_rate_hz,
            person_id: self.person_id,
            trajectory_id: self.trajectory_id,
            sensor_id: self.sensor_id,
            label,
            events_s: self.events_s,
            peak_index: self.peak_index,
            fingerprint: self.fingerprint,
        })
    }
}

pub fn write_signal(signal: &VibrationSignal, path: &Path) -> Result<()> {
    match SignalFormat::from_path(path) {
        SignalFormat::Csv => fs::write(path, encode_csv(signal)?)?,
        SignalFormat::Binary => fs::write(path, encode_binary(std::slice::from_ref(signal))?)?,
    }
    Ok(())
}

/// Write several records into one binary file (used for segment sets).
pub fn write_signal_set(signals: &[VibrationSignal], path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode_binary(signals)?)?;
    w.flush()?;
    Ok(())
}

pub fn read_signal(path: &Path) -> Result<VibrationSignal> {
    let mut set = read_signal_set(path)?;
    if set.is_empty() {
        return Err(Error::Empty(format!("{} holds no records", path.display())));
    }
    Ok(set.swap_remove(0))
}

/// Read every record in a file; CSV files hold exactly one.
pub fn read_signal_set(path: &Path) -> Result<Vec<VibrationSignal>> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let bytes = fs::read(path)?;
    if bytes.starts_with(BINARY_MAGIC) {
        decode_binary(&bytes)
    } else if bytes.starts_with(CSV_PREFIX.trim_end().as_bytes()) {
        let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
            line: 0,
            message: format!("invalid UTF-8: {e}"),
        })?;
        Ok(vec![decode_csv(&text)?])
    } else {
        Err(Error::BadFormat(format!(
            "{}: neither `VIBS1` binary nor `#META` CSV",
            path.display()
        )))
    }
}

pub fn encode_csv(signal: &VibrationSignal) -> Result<String> {
    let meta = serde_json::to_string(&MetaRecord::from(signal.meta()))?;
    let mut out = String::with_capacity(signal.len() * 20 + meta.len() + 8);
    out.push_str(CSV_PREFIX);
    out.push_str(&meta);
    out.push('\n');
    for s in signal.samples() {
        // Display for f64 prints the shortest string that round-trips exactly.
        out.push_str(&format!("{s}\n"));
    }
    Ok(out)
}

pub fn decode_csv(text: &str) -> Result<VibrationSignal> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let json = header.strip_prefix(CSV_PREFIX).ok_or(Error::Parse {
        line: 1,
        message: "expected `#META {json}` header".into(),
    })?;
    let record: MetaRecord = serde_json::from_str(json).map_err(|e| Error::Parse {
        line: 1,
        message: format!("metadata: {e}"),
    })?;
    let meta = record
        .into_meta()
        .map_err(|message| Error::Parse { line: 1, message })?;
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("not a number: `{t}`"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("non-finite sample `{t}`"),
            });
        }
        samples.push(v);
    }
    VibrationSignal::new(samples, meta).map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })
}

pub fn encode_binary(signals: &[VibrationSignal]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for s in signals {
        let meta = serde_json::to_vec(&MetaRecord::from(s.meta()))?;
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&(s.len() as u64).to_le_bytes());
        for v in s.samples() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Truncated {
                offset: self.pos as u64,
                message: format!("need {n} bytes for {what}, {} left", self.bytes.len() - self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
}

pub fn decode_binary(bytes: &[u8]) -> Result<Vec<VibrationSignal>> {
    let mut cur = Cursor { bytes, pos: 0 };
    let mut out = Vec::new();
    while cur.pos < bytes.len() {
        let start = cur.pos;
        if cur.take(BINARY_MAGIC.len(), "magic")? != BINARY_MAGIC {
            return Err(Error::BadFormat(format!("bad record magic at offset {start}")));
        }
        let len = u32::from_le_bytes(cur.take(4, "metadata length")?.try_into().unwrap()) as usize;
        let json_at = cur.pos;
        let record: MetaRecord =
            serde_json::from_slice(cur.take(len, "metadata")?).map_err(|e| Error::Parse {
                line: 0,
                message: format!("metadata at byte {json_at}: {e}"),
            })?;
        let meta = record.into_meta().map_err(|message| Error::Parse { line: 0, message })?;
        let n = u64::from_le_bytes(cur.take(8, "sample count")?.try_into().unwrap()) as usize;
        let raw = cur.take(n.checked_mul(8).ok_or(Error::Truncated {
            offset: cur.pos as u64,
            message: "sample count overflow".into(),
        })?, "samples")?;
        let samples = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push(VibrationSignal::new(samples, meta)?);
    }
    Ok(out)
}
