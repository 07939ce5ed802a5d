//! Core signal types: floor-velocity recordings, emotion labels and quadrants.

mod io;
pub mod population;
pub mod synth;

pub use io::{read_signal, read_signal_set, write_signal, write_signal_set, SignalFormat};
pub use synth::{generate_synthetic_walk, ProfileOffsets, SynthProfile};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 500.0;

/// Self-assessed valence and arousal, each on the 1..=9 scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionLabel {
    valence: f64,
    arousal: f64,
}

impl EmotionLabel {
    pub const MIN: f64 = 1.0;
    pub const MAX: f64 = 9.0;
    /// Scores at or below this value fall in the low half of a dimension.
    pub const QUADRANT_THRESHOLD: f64 = 5.0;

    pub fn new(valence: f64, arousal: f64) -> Result<Self> {
        for (name, v) in [("valence", valence), ("arousal", arousal)] {
            if !v.is_finite() || !(Self::MIN..=Self::MAX).contains(&v) {
                return Err(Error::InvalidLabel(format!("{name} {v} outside [1, 9]")));
            }
        }
        Ok(Self { valence, arousal })
    }

    pub fn valence(&self) -> f64 {
        self.valence
    }

    pub fn arousal(&self) -> f64 {
        self.arousal
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.valence, self.arousal]
    }

    pub fn quadrant(&self) -> EmotionQuadrant {
        quadrant_of(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EmotionQuadrant {
    #[serde(rename = "HVHA")]
    Hvha,
    #[serde(rename = "HVLA")]
    Hvla,
    #[serde(rename = "LVHA")]
    Lvha,
    #[serde(rename = "LVLA")]
    Lvla,
}

impl EmotionQuadrant {
    pub const ALL: [EmotionQuadrant; 4] = [
        EmotionQuadrant::Hvha,
        EmotionQuadrant::Hvla,
        EmotionQuadrant::Lvha,
        EmotionQuadrant::Lvla,
    ];

    pub fn index(self) -> usize {
        match self {
            EmotionQuadrant::Hvha => 0,
            EmotionQuadrant::Hvla => 1,
            EmotionQuadrant::Lvha => 2,
            EmotionQuadrant::Lvla => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionQuadrant::Hvha => "HVHA",
            EmotionQuadrant::Hvla => "HVLA",
            EmotionQuadrant::Lvha => "LVHA",
            EmotionQuadrant::Lvla => "LVLA",
        }
    }

    pub fn high_valence(self) -> bool {
        matches!(self, EmotionQuadrant::Hvha | EmotionQuadrant::Hvla)
    }

    pub fn high_arousal(self) -> bool {
        matches!(self, EmotionQuadrant::Hvha | EmotionQuadrant::Lvha)
    }

    pub fn from_halves(high_valence: bool, high_arousal: bool) -> Self {
        match (high_valence, high_arousal) {
            (true, true) => EmotionQuadrant::Hvha,
            (true, false) => EmotionQuadrant::Hvla,
            (false, true) => EmotionQuadrant::Lvha,
            (false, false) => EmotionQuadrant::Lvla,
        }
    }
}

impl std::fmt::Display for EmotionQuadrant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Scores strictly above 5 are "high"; 5 itself is low.
pub fn quadrant_of(label: &EmotionLabel) -> EmotionQuadrant {
    EmotionQuadrant::from_halves(
        label.valence > EmotionLabel::QUADRANT_THRESHOLD,
        label.arousal > EmotionLabel::QUADRANT_THRESHOLD,
    )
}

/// Provenance and acquisition metadata carried with every recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMeta {
    pub sample_rate_hz: f64,
    pub person_id: String,
    pub trajectory_id: String,
    pub sensor_id: String,
    pub label: Option<EmotionLabel>,
    /// Ground-truth footstep times in seconds (synthetic signals only).
    pub events_s: Option<Vec<f64>>,
    /// Index of the footstep peak in the parent signal (segments only).
    pub peak_index: Option<usize>,
    /// Fingerprint of the configuration that produced this artifact.
    pub fingerprint: Option<String>,
}

impl SignalMeta {
    pub fn new(sample_rate_hz: f64) -> Self {
        Self {
            sample_rate_hz,
            person_id: String::new(),
            trajectory_id: String::new(),
            sensor_id: String::new(),
            label: None,
            events_s: None,
            peak_index: None,
            fingerprint: None,
        }
    }

    pub fn with_ids(
        mut self,
        person: impl Into<String>,
        trajectory: impl Into<String>,
        sensor: impl Into<String>,
    ) -> Self {
        self.person_id = person.into();
        self.trajectory_id = trajectory.into();
        self.sensor_id = sensor.into();
        self
    }

    pub fn with_label(mut self, label: EmotionLabel) -> Self {
        self.label = Some(label);
        self
    }
}

/// Amplified geophone velocity trace. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct VibrationSignal {
    samples: Vec<f64>,
    meta: SignalMeta,
}

impl VibrationSignal {
    pub fn new(samples: Vec<f64>, meta: SignalMeta) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidSignal("no samples".into()));
        }
        if !(meta.sample_rate_hz.is_finite() && meta.sample_rate_hz > 0.0) {
            return Err(Error::InvalidSignal(format!(
                "sample rate {} must be positive",
                meta.sample_rate_hz
            )));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidSignal(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, meta })
    }

    /// Convenience constructor with empty identifiers.
    pub fn from_samples(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        Self::new(samples, SignalMeta::new(sample_rate_hz))
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
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

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.meta.sample_rate_hz
    }

    pub fn label(&self) -> Option<EmotionLabel> {
        self.meta.label
    }

    /// Same metadata, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.meta.clone())
    }

    pub fn with_meta(self, meta: SignalMeta) -> Result<Self> {
        Self::new(self.samples, meta)
    }

    pub fn into_parts(self) -> (Vec<f64>, SignalMeta) {
        (self.samples, self.meta)
    }
}
