//! Footstep segmentation and clipping repair.

pub mod clipping;
pub mod cwt;
pub mod detect;
pub mod segment;

pub use clipping::{detect_clipping, repair_clipping, ClippedRun, Polarity, Repair};
pub use cwt::{cwt, cwt_complex, MorseWavelet};
pub use detect::{detect_footsteps, DetectConfig};
pub use segment::{segment_footstep, FootstepSegment, SegmentConfig};

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostics;
use crate::error::Result;
use crate::signal::VibrationSignal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub detect: DetectConfig,
    pub segment: SegmentConfig,
    /// Sensor limit; `None` infers it from the largest absolute sample.
    pub clip_limit: Option<f64>,
    pub clip_min_run: usize,
    pub repair_poly_order: usize,
    pub repair_neighbors: usize,
    /// Repair the whole signal before segmenting (otherwise per segment).
    pub repair_before_segmentation: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            detect: DetectConfig::default(),
            segment: SegmentConfig::default(),
            clip_limit: None,
            clip_min_run: 3,
            repair_poly_order: 4,
            repair_neighbors: 8,
            repair_before_segmentation: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub repaired: VibrationSignal,
    pub peaks: Vec<usize>,
    pub segments: Vec<FootstepSegment>,
    pub clipped_runs: Vec<ClippedRun>,
    pub diagnostics: Diagnostics,
}

fn clip_runs(signal: &VibrationSignal, cfg: &PreprocessConfig) -> Vec<ClippedRun> {
    let limit = cfg.clip_limit.unwrap_or_else(|| {
        signal
            .samples()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    });
    if limit <= 0.0 {
        return Vec::new();
    }
    detect_clipping(signal, limit, cfg.clip_min_run)
}

/// Repair clipping, detect footsteps and cut one segment per footstep.
/// Footsteps whose window leaves the signal are dropped.
pub fn preprocess_signal(signal: &VibrationSignal, cfg: &PreprocessConfig) -> Result<Preprocessed> {
    let mut diagnostics = Diagnostics::new();
    let runs = clip_runs(signal, cfg);
    let repaired = if cfg.repair_before_segmentation && !runs.is_empty() {
        let r = repair_clipping(signal, &runs, cfg.repair_poly_order, cfg.repair_neighbors)?;
        diagnostics.extend(r.diagnostics);
        r.signal
    } else {
        signal.clone()
    };
    let peaks = detect_footsteps(&repaired, &cfg.detect)?;
    let mut segments = Vec::with_capacity(peaks.len());
    for &p in &peaks {
        match segment_footstep(&repaired, p, &cfg.segment) {
            Ok(seg) => segments.push(seg),
            Err(crate::Error::SegmentBounds { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    if !cfg.repair_before_segmentation && !runs.is_empty() {
        let mut fixed = Vec::with_capacity(segments.len());
        for seg in segments {
            let sig = seg.to_signal()?;
            let local = clip_runs(&sig, cfg);
            if local.is_empty() {
                fixed.push(seg);
                continue;
            }
            let r = repair_clipping(&sig, &local, cfg.repair_poly_order, cfg.repair_neighbors)?;
            diagnostics.extend(r.diagnostics);
            fixed.push(seg.with_samples(r.signal.samples().to_vec()));
        }
        segments = fixed;
    }
    Ok(Preprocessed {
        repaired,
        peaks,
        segments,
        clipped_runs: runs,
        diagnostics,
    })
}
