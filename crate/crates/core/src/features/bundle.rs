//! Fixed slot layout and assembly of all features of one footstep.

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostics;
use crate::dsp::Matrix;
use crate::error::{Error, Result};
use crate::preprocess::FootstepSegment;

use super::compact::{legendre_coefficients, lpc};
use super::frequency::{fft_len, frequency_features};
use super::gait::{double_support_time, energy_contours, energy_window_count, peak_ratio_and_fwhm, step_frequency};
use super::spectral::{spectral_features, SpectralShape};
use super::statistical::{statistical_features, StatisticalFeatures};
use super::temporal::time_domain_features;
use super::timefreq::{frame_count, time_frequency_features};
use super::FeatureConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureFamily {
    Gait,
    Vibration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    GaitOnly,
    VibrationOnly,
    #[default]
    Both,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 3] = [FeatureSet::GaitOnly, FeatureSet::VibrationOnly, FeatureSet::Both];

    pub fn includes(self, family: FeatureFamily) -> bool {
        match self {
            FeatureSet::GaitOnly => family == FeatureFamily::Gait,
            FeatureSet::VibrationOnly => family == FeatureFamily::Vibration,
            FeatureSet::Both => true,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::GaitOnly => "gait_only",
            FeatureSet::VibrationOnly => "vibration_only",
            FeatureSet::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarSlot {
    pub name: String,
    pub family: FeatureFamily,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceSlot {
    pub name: String,
    pub family: FeatureFamily,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSlot {
    pub name: String,
    pub family: FeatureFamily,
    pub rows: usize,
    pub cols: usize,
}

/// Names and shapes of every slot, shared by all bundles of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BundleLayout {
    pub scalars: Vec<ScalarSlot>,
    pub sequences: Vec<SequenceSlot>,
    pub images: Vec<ImageSlot>,
}

/// Slot indices kept by a feature-set restriction.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub layout: BundleLayout,
    scalars: Vec<usize>,
    sequences: Vec<usize>,
    images: Vec<usize>,
}

impl Projection {
    pub fn apply(&self, b: &FeatureBundle) -> FeatureBundle {
        FeatureBundle {
            scalars: self.scalars.iter().map(|&i| b.scalars[i]).collect(),
            sequences: self.sequences.iter().map(|&i| b.sequences[i].clone()).collect(),
            images: self.images.iter().map(|&i| b.images[i].clone()).collect(),
        }
    }
}

const GAIT_SCALARS: [&str; 5] = [
    "step_frequency",
    "double_support_time",
    "peak_ratio_hs_to",
    "fwhm_hs",
    "fwhm_to",
];
const TEMPORAL_SCALARS: [&str; 5] = ["jitter", "shimmer", "jitter_rap", "zcr", "harmonic_ratio"];

impl BundleLayout {
    /// Layout produced by [`extract_bundle`] for segments of `segment_len`
    /// samples at `fs`.
    pub fn for_segments(cfg: &FeatureConfig, segment_len: usize, fs: f64) -> Self {
        use FeatureFamily::*;
        let mut scalars: Vec<ScalarSlot> = GAIT_SCALARS
            .iter()
            .map(|n| ScalarSlot { name: n.to_string(), family: Gait })
            .collect();
        let vib = |n: String| ScalarSlot { name: n, family: Vibration };
        scalars.extend(StatisticalFeatures::NAMES.iter().map(|n| vib(format!("stat_{n}"))));
        scalars.extend(SpectralShape::NAMES.iter().map(|n| vib(format!("spectral_{n}"))));
        scalars.extend(SpectralShape::NAMES.iter().map(|n| vib(format!("delta_{n}"))));
        scalars.extend(TEMPORAL_SCALARS.iter().map(|n| vib(n.to_string())));

        let windows = energy_window_count(segment_len, fs, cfg.energy_window_s);
        let seq = |name: &str, family, len| SequenceSlot { name: name.into(), family, len };
        let sequences = vec![
            seq("energy_raw", Gait, windows),
            seq("energy_smoothed", Gait, windows),
            seq("energy_log", Gait, windows),
            seq("f0_contour", Vibration, frame_count(segment_len, cfg.stft_frame, cfg.stft_hop)),
            seq("fft_magnitude", Vibration, fft_len(segment_len) / 2 + 1),
            seq("cepstrum", Vibration, cfg.cepstrum_len),
            seq("lpc", Vibration, cfg.lpc_order),
            seq("legendre", Vibration, cfg.legendre_order + 1),
        ];
        let images = vec![
            ImageSlot { name: "cwt".into(), family: Vibration, rows: cfg.cwt_image.0, cols: cfg.cwt_image.1 },
            ImageSlot { name: "hht".into(), family: Vibration, rows: cfg.hht_image.0, cols: cfg.hht_image.1 },
        ];
        Self { scalars, sequences, images }
    }

    pub fn projection(&self, set: FeatureSet) -> Projection {
        let scalars: Vec<usize> = (0..self.scalars.len())
            .filter(|&i| set.includes(self.scalars[i].family))
            .collect();
        let sequences: Vec<usize> = (0..self.sequences.len())
            .filter(|&i| set.includes(self.sequences[i].family))
            .collect();
        let images: Vec<usize> = (0..self.images.len())
            .filter(|&i| set.includes(self.images[i].family))
            .collect();
        let layout = BundleLayout {
            scalars: scalars.iter().map(|&i| self.scalars[i].clone()).collect(),
            sequences: sequences.iter().map(|&i| self.sequences[i].clone()).collect(),
            images: images.iter().map(|&i| self.images[i].clone()).collect(),
        };
        Projection { layout, scalars, sequences, images }
    }

    pub fn scalar_index(&self, name: &str) -> Option<usize> {
        self.scalars.iter().position(|s| s.name == name)
    }

    /// Number of values in a flattened bundle.
    pub fn flat_len(&self) -> usize {
        self.scalars.len()
            + self.sequences.iter().map(|s| s.len).sum::<usize>()
            + self.images.iter().map(|s| s.rows * s.cols).sum::<usize>()
    }

    /// Column names of a flattened bundle.
    pub fn flat_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.scalars.iter().map(|s| s.name.clone()).collect();
        for s in &self.sequences {
            names.extend((0..s.len).map(|i| format!("{}_{i}", s.name)));
        }
        for s in &self.images {
            for r in 0..s.rows {
                names.extend((0..s.cols).map(|c| format!("{}_{r}_{c}", s.name)));
            }
        }
        names
    }
}

/// All features of one footstep grouped by data format.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureBundle {
    pub scalars: Vec<f64>,
    pub sequences: Vec<Vec<f64>>,
    pub images: Vec<Matrix>,
}

impl FeatureBundle {
    /// Shape error naming the first slot that disagrees with `layout`.
    pub fn check(&self, layout: &BundleLayout) -> Result<()> {
        if self.scalars.len() != layout.scalars.len() {
            return Err(Error::Shape {
                slot: "scalars".into(),
                expected: layout.scalars.len().to_string(),
                found: self.scalars.len().to_string(),
            });
        }
        if self.sequences.len() != layout.sequences.len() {
            return Err(Error::Shape {
                slot: "sequences".into(),
                expected: layout.sequences.len().to_string(),
                found: self.sequences.len().to_string(),
            });
        }
        for (s, slot) in self.sequences.iter().zip(&layout.sequences) {
            if s.len() != slot.len {
                return Err(Error::Shape {
                    slot: slot.name.clone(),
                    expected: slot.len.to_string(),
                    found: s.len().to_string(),
                });
            }
        }
        if self.images.len() != layout.images.len() {
            return Err(Error::Shape {
                slot: "images".into(),
                expected: layout.images.len().to_string(),
                found: self.images.len().to_string(),
            });
        }
        for (m, slot) in self.images.iter().zip(&layout.images) {
            if (m.rows, m.cols) != (slot.rows, slot.cols) {
                return Err(Error::Shape {
                    slot: slot.name.clone(),
                    expected: format!("{}x{}", slot.rows, slot.cols),
                    found: format!("{}x{}", m.rows, m.cols),
                });
            }
        }
        Ok(())
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.scalars.clone();
        for s in &self.sequences {
            out.extend_from_slice(s);
        }
        for m in &self.images {
            out.extend_from_slice(&m.data);
        }
        out
    }

    pub fn unflatten(values: &[f64], layout: &BundleLayout) -> Result<Self> {
        if values.len() != layout.flat_len() {
            return Err(Error::LengthMismatch {
                expected: layout.flat_len(),
                found: values.len(),
            });
        }
        let mut at = layout.scalars.len();
        let scalars = values[..at].to_vec();
        let mut sequences = Vec::with_capacity(layout.sequences.len());
        for s in &layout.sequences {
            sequences.push(values[at..at + s.len].to_vec());
            at += s.len;
        }
        let mut images = Vec::with_capacity(layout.images.len());
        for s in &layout.images {
            let n = s.rows * s.cols;
            images.push(Matrix {
                rows: s.rows,
                cols: s.cols,
                data: values[at..at + n].to_vec(),
            });
            at += n;
        }
        Ok(Self { scalars, sequences, images })
    }

    pub fn is_finite(&self) -> bool {
        self.scalars.iter().all(|v| v.is_finite())
            && self.sequences.iter().flatten().all(|v| v.is_finite())
            && self.images.iter().flat_map(|m| &m.data).all(|v| v.is_finite())
    }
}

/// Per-trajectory quantities shared by all of its footsteps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryContext {
    pub step_frequency_hz: f64,
}

impl TrajectoryContext {
    pub fn from_peak_times(peak_times_s: &[f64]) -> Result<Self> {
        Ok(Self {
            step_frequency_hz: step_frequency(peak_times_s)?,
        })
    }
}

/// Extract every feature of `segment` into the layout of
/// [`BundleLayout::for_segments`].
pub fn extract_bundle(
    segment: &FootstepSegment,
    ctx: &TrajectoryContext,
    cfg: &FeatureConfig,
    diag: &mut Diagnostics,
) -> Result<FeatureBundle> {
    let x = segment.samples();
    let fs = segment.sample_rate_hz();
    let layout = BundleLayout::for_segments(cfg, x.len(), fs);

    let dst = double_support_time(x, fs, cfg, diag);
    let shape = peak_ratio_and_fwhm(x, fs, cfg, diag);
    let energy = energy_contours(x, fs, cfg.energy_window_s, cfg.smooth_span_s, cfg.log_epsilon);
    let stats = statistical_features(x, fs);
    let freq = frequency_features(x, fs, cfg);
    let spectral = spectral_features(x, fs, fft_len(x.len()), cfg, diag);
    let temporal = time_domain_features(x, fs, diag);
    let tf = time_frequency_features(x, fs, cfg, diag)?;

    let mut scalars = vec![
        ctx.step_frequency_hz,
        dst,
        shape.peak_ratio_hs_to,
        shape.fwhm_hs,
        shape.fwhm_to,
    ];
    scalars.extend(stats.to_vec());
    scalars.extend(spectral.shape.to_vec());
    scalars.extend(spectral.delta.to_vec());
    scalars.extend([
        temporal.jitter,
        temporal.shimmer,
        temporal.jitter_rap,
        temporal.zcr,
        freq.harmonic_ratio,
    ]);
    let sequences = vec![
        energy.raw,
        energy.smoothed,
        energy.log,
        tf.f0_contour,
        freq.fft_magnitude,
        freq.cepstrum,
        lpc(x, cfg.lpc_order, diag),
        legendre_coefficients(x, cfg.legendre_order),
    ];
    let bundle = FeatureBundle {
        scalars,
        sequences,
        images: vec![tf.cwt_image, tf.hht_image],
    };
    bundle.check(&layout)?;
    if !bundle.is_finite() {
        return Err(Error::InvalidSignal("non-finite feature value".into()));
    }
    Ok(bundle)
}
