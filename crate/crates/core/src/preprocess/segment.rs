//! Fixed-length single-footstep windows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{SignalMeta, VibrationSignal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    /// Time kept before the detected peak.
    pub pre_s: f64,
    /// Total window length.
    pub length_s: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            pre_s: 0.15,
            length_s: 0.35,
        }
    }
}

impl SegmentConfig {
    pub fn pre_samples(&self, fs: f64) -> usize {
        (self.pre_s * fs).round() as usize
    }

    pub fn len_samples(&self, fs: f64) -> usize {
        (self.length_s * fs).round() as usize
    }
}

/// One footstep cut from a longer recording.
#[derive(Debug, Clone, PartialEq)]
pub struct FootstepSegment {
    samples: Vec<f64>,
    peak_index_in_signal: usize,
    meta: SignalMeta,
}

impl FootstepSegment {
    /// Build a segment directly (tests, stored segment sets).
    pub fn new(samples: Vec<f64>, peak_index_in_signal: usize, meta: SignalMeta) -> Self {
        Self {
            samples,
            peak_index_in_signal,
            meta,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn peak_index_in_signal(&self) -> usize {
        self.peak_index_in_signal
    }

    pub fn meta(&self) -> &SignalMeta {
        &self.meta
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.meta.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            samples,
            peak_index_in_signal: self.peak_index_in_signal,
            meta: self.meta.clone(),
        }
    }

    /// As a stand-alone record carrying the peak index.
    pub fn to_signal(&self) -> Result<VibrationSignal> {
        let mut meta = self.meta.clone();
        meta.peak_index = Some(self.peak_index_in_signal);
        meta.events_s = None;
        VibrationSignal::new(self.samples.clone(), meta)
    }

    pub fn from_signal(signal: VibrationSignal) -> Result<Self> {
        let (samples, meta) = signal.into_parts();
        let peak = meta
            .peak_index
            .ok_or_else(|| Error::InvalidSignal("segment record lacks peak_index".into()))?;
        Ok(Self::new(samples, peak, meta))
    }
}

/// Window `[peak - pre, peak - pre + length)` of the signal.
pub fn segment_footstep(
    signal: &VibrationSignal,
    peak_index: usize,
    cfg: &SegmentConfig,
) -> Result<FootstepSegment> {
    let fs = signal.sample_rate_hz();
    let start = peak_index as i64 - cfg.pre_samples(fs) as i64;
    let end = start + cfg.len_samples(fs) as i64;
    if start < 0 || end > signal.len() as i64 {
        return Err(Error::SegmentBounds {
            start,
            end,
            len: signal.len(),
        });
    }
    let mut meta = signal.meta().clone();
    meta.events_s = None;
    meta.peak_index = Some(peak_index);
    Ok(FootstepSegment::new(
        signal.samples()[start as usize..end as usize].to_vec(),
        peak_index,
        meta,
    ))
}
