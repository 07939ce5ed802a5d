//! Parametric footstep-vibration simulator.
//!
//! A footstep is the sum of three Gaussian-windowed sinusoids: a heel-strike
//! burst (~150 Hz), the floor's fundamental mode rung up by the heel impact
//! (~50 Hz), and a toe-off burst (~25 Hz) delayed by the double-support time.
//! Each footstep is scaled so its peak absolute value equals the configured
//! amplitude. Event times are kept as a sidecar for segmentation tests.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{EmotionLabel, EmotionQuadrant, SignalMeta, VibrationSignal, DEFAULT_SAMPLE_RATE_HZ};
use crate::error::{Error, Result};

const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3; // 2 * sqrt(2 ln 2)

/// Additive per-quadrant adjustments to a [`SynthProfile`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileOffsets {
    pub step_frequency_hz: f64,
    pub footstep_amplitude: f64,
    pub hs_to_peak_ratio: f64,
    pub hs_fwhm_s: f64,
    pub to_fwhm_s: f64,
    pub double_support_s: f64,
    pub noise_rms: f64,
}

impl ProfileOffsets {
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            step_frequency_hz: self.step_frequency_hz * k,
            footstep_amplitude: self.footstep_amplitude * k,
            hs_to_peak_ratio: self.hs_to_peak_ratio * k,
            hs_fwhm_s: self.hs_fwhm_s * k,
            to_fwhm_s: self.to_fwhm_s * k,
            double_support_s: self.double_support_s * k,
            noise_rms: self.noise_rms * k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthProfile {
    pub sample_rate_hz: f64,
    pub step_frequency_hz: f64,
    pub footstep_amplitude: f64,
    pub hs_to_peak_ratio: f64,
    pub hs_fwhm_s: f64,
    pub to_fwhm_s: f64,
    pub double_support_s: f64,
    pub noise_rms: f64,
    pub clip_limit: Option<f64>,
    pub heel_frequency_hz: f64,
    pub toe_frequency_hz: f64,
    pub mode_frequency_hz: f64,
    /// Amplitude of the structural-mode burst relative to the heel burst.
    pub mode_gain: f64,
    pub mode_fwhm_s: f64,
    /// Standard deviation of footstep timing around the nominal cadence.
    pub step_jitter_s: f64,
    pub emotion_modulation: BTreeMap<EmotionQuadrant, ProfileOffsets>,
}

impl Default for SynthProfile {
    fn default() -> Self {
        Self {
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            step_frequency_hz: 1.8,
            footstep_amplitude: 1.0,
            hs_to_peak_ratio: 2.0,
            hs_fwhm_s: 0.015,
            to_fwhm_s: 0.04,
            double_support_s: 0.12,
            noise_rms: 0.01,
            clip_limit: None,
            heel_frequency_hz: 150.0,
            toe_frequency_hz: 25.0,
            mode_frequency_hz: 50.0,
            mode_gain: 1.0,
            mode_fwhm_s: 0.03,
            step_jitter_s: 0.0,
            emotion_modulation: BTreeMap::new(),
        }
    }
}

/// Parameters after applying a quadrant's modulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedProfile {
    pub step_frequency_hz: f64,
    pub footstep_amplitude: f64,
    pub hs_to_peak_ratio: f64,
    pub hs_fwhm_s: f64,
    pub to_fwhm_s: f64,
    pub double_support_s: f64,
    pub noise_rms: f64,
}

impl SynthProfile {
    /// Apply the modulation for `quadrant` and validate the result.
    pub fn resolve(&self, quadrant: EmotionQuadrant) -> Result<ResolvedProfile> {
        self.validate_static()?;
        let off = self
            .emotion_modulation
            .get(&quadrant)
            .copied()
            .unwrap_or_default();
        let r = ResolvedProfile {
            step_frequency_hz: self.step_frequency_hz + off.step_frequency_hz,
            footstep_amplitude: self.footstep_amplitude + off.footstep_amplitude,
            hs_to_peak_ratio: self.hs_to_peak_ratio + off.hs_to_peak_ratio,
            hs_fwhm_s: self.hs_fwhm_s + off.hs_fwhm_s,
            to_fwhm_s: self.to_fwhm_s + off.to_fwhm_s,
            double_support_s: self.double_support_s + off.double_support_s,
            noise_rms: self.noise_rms + off.noise_rms,
        };
        let positive = [
            ("step_frequency_hz", r.step_frequency_hz),
            ("footstep_amplitude", r.footstep_amplitude),
            ("hs_to_peak_ratio", r.hs_to_peak_ratio),
            ("hs_fwhm_s", r.hs_fwhm_s),
            ("to_fwhm_s", r.to_fwhm_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidProfile(format!(
                    "{name} = {v} for {quadrant} must be positive"
                )));
            }
        }
        for (name, v) in [("double_support_s", r.double_support_s), ("noise_rms", r.noise_rms)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidProfile(format!(
                    "{name} = {v} for {quadrant} must be non-negative"
                )));
            }
        }
        Ok(r)
    }

    fn validate_static(&self) -> Result<()> {
        let positive = [
            ("sample_rate_hz", self.sample_rate_hz),
            ("heel_frequency_hz", self.heel_frequency_hz),
            ("toe_frequency_hz", self.toe_frequency_hz),
            ("mode_frequency_hz", self.mode_frequency_hz),
            ("mode_fwhm_s", self.mode_fwhm_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidProfile(format!("{name} = {v} must be positive")));
            }
        }
        for (name, v) in [("mode_gain", self.mode_gain), ("step_jitter_s", self.step_jitter_s)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidProfile(format!("{name} = {v} must be non-negative")));
            }
        }
        if let Some(c) = self.clip_limit {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidProfile(format!("clip_limit = {c} must be positive")));
            }
        }
        let nyquist = self.sample_rate_hz / 2.0;
        for (name, f) in [
            ("heel_frequency_hz", self.heel_frequency_hz),
            ("toe_frequency_hz", self.toe_frequency_hz),
            ("mode_frequency_hz", self.mode_frequency_hz),
        ] {
            if f >= nyquist {
                return Err(Error::InvalidProfile(format!(
                    "{name} = {f} at or above Nyquist {nyquist}"
                )));
            }
        }
        Ok(())
    }
}

fn gabor(t: f64, sigma: f64, freq: f64) -> f64 {
    (-0.5 * (t / sigma).powi(2)).exp() * (std::f64::consts::TAU * freq * t).cos()
}

/// Nominal footstep times: `(k + 1/2) / f` for `k < floor(duration * f)`.
pub fn nominal_event_times(step_frequency_hz: f64, duration_s: f64) -> Vec<f64> {
    let n = (duration_s * step_frequency_hz + 1e-9).floor() as usize;
    (0..n)
        .map(|k| (k as f64 + 0.5) / step_frequency_hz)
        .collect()
}

/// Render a walk with the given label. Pure in `(profile, label, duration_s, seed)`.
pub fn generate_synthetic_walk(
    profile: &SynthProfile,
    label: EmotionLabel,
    duration_s: f64,
    seed: u64,
) -> Result<VibrationSignal> {
    let p = profile.resolve(label.quadrant())?;
    if !(duration_s.is_finite() && duration_s * p.step_frequency_hz >= 1.0) {
        return Err(Error::InvalidProfile(format!(
            "duration {duration_s} s shorter than one step period"
        )));
    }
    let fs = profile.sample_rate_hz;
    let n = (duration_s * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut events = nominal_event_times(p.step_frequency_hz, duration_s);
    if profile.step_jitter_s > 0.0 {
        let jitter = Normal::new(0.0, profile.step_jitter_s).expect("finite jitter");
        let half = 0.5 / p.step_frequency_hz;
        for t in events.iter_mut() {
            let dt: f64 = jitter.sample(&mut rng);
            *t += dt.clamp(-0.4 * half, 0.4 * half);
        }
    }

    let hs_sigma = p.hs_fwhm_s / FWHM_PER_SIGMA;
    let to_sigma = p.to_fwhm_s / FWHM_PER_SIGMA;
    let mode_sigma = profile.mode_fwhm_s / FWHM_PER_SIGMA;
    let toe_amp = 1.0 / p.hs_to_peak_ratio;
    let reach = 5.0 * hs_sigma.max(mode_sigma).max(to_sigma) + p.double_support_s;

    let mut samples = vec![0.0; n];
    let mut step = Vec::new();
    for &te in &events {
        let lo = (((te - reach) * fs).floor().max(0.0)) as usize;
        let hi = ((((te + reach) * fs).ceil()) as usize).min(n);
        if lo >= hi {
            continue;
        }
        step.clear();
        step.extend((lo..hi).map(|i| {
            let t = i as f64 / fs - te;
            gabor(t, hs_sigma, profile.heel_frequency_hz)
                + profile.mode_gain * gabor(t, mode_sigma, profile.mode_frequency_hz)
                + toe_amp * gabor(t - p.double_support_s, to_sigma, profile.toe_frequency_hz)
        }));
        let peak = step.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak <= 0.0 {
            continue;
        }
        let scale = p.footstep_amplitude / peak;
        for (dst, v) in samples[lo..hi].iter_mut().zip(&step) {
            *dst += v * scale;
        }
    }

    if p.noise_rms > 0.0 {
        let noise = Normal::new(0.0, p.noise_rms).expect("finite noise");
        for s in samples.iter_mut() {
            *s += noise.sample(&mut rng);
        }
    }
    if let Some(limit) = profile.clip_limit {
        for s in samples.iter_mut() {
            *s = s.clamp(-limit, limit);
        }
    }

    let mut meta = SignalMeta::new(fs).with_label(label);
    meta.person_id = "synthetic".into();
    meta.trajectory_id = format!("seed{seed}");
    meta.sensor_id = "s0".into();
    meta.events_s = Some(events);
    VibrationSignal::new(samples, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn calm() -> EmotionLabel {
        EmotionLabel::new(3.0, 3.0).unwrap()
    }

    #[test]
    fn event_count_and_spacing() {
        let profile = SynthProfile {
            step_frequency_hz: 2.0,
            ..Default::default()
        };
        let sig = generate_synthetic_walk(&profile, calm(), 5.0, 1).unwrap();
        let ev = sig.meta().events_s.as_ref().unwrap();
        assert_eq!(ev.len(), 10);
        for w in ev.windows(2) {
            assert!((w[1] - w[0] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_peak_equals_amplitude() {
        let profile = SynthProfile {
            noise_rms: 0.0,
            footstep_amplitude: 2.5,
            ..Default::default()
        };
        let sig = generate_synthetic_walk(&profile, calm(), 4.0, 3).unwrap();
        let peak = sig.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 2.5).abs() / 2.5 < 0.01, "peak {peak}");
    }

    #[test]
    fn deterministic_in_seed() {
        let profile = SynthProfile {
            noise_rms: 0.1,
            step_jitter_s: 0.01,
            ..Default::default()
        };
        let a = generate_synthetic_walk(&profile, calm(), 3.0, 42).unwrap();
        let b = generate_synthetic_walk(&profile, calm(), 3.0, 42).unwrap();
        let c = generate_synthetic_walk(&profile, calm(), 3.0, 43).unwrap();
        assert_eq!(a.samples(), b.samples());
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn clipping_applied() {
        let profile = SynthProfile {
            clip_limit: Some(0.5),
            ..Default::default()
        };
        let sig = generate_synthetic_walk(&profile, calm(), 2.0, 0).unwrap();
        assert!(sig.samples().iter().all(|v| v.abs() <= 0.5));
    }

    #[test]
    fn invalid_profiles_rejected() {
        let bad = SynthProfile {
            hs_fwhm_s: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            generate_synthetic_walk(&bad, calm(), 2.0, 0),
            Err(Error::InvalidProfile(_))
        ));
        let nan = SynthProfile {
            noise_rms: f64::NAN,
            ..Default::default()
        };
        assert!(generate_synthetic_walk(&nan, calm(), 2.0, 0).is_err());
        let mut modulated = SynthProfile::default();
        modulated.emotion_modulation.insert(
            EmotionQuadrant::Lvla,
            ProfileOffsets {
                step_frequency_hz: -5.0,
                ..Default::default()
            },
        );
        assert!(generate_synthetic_walk(&modulated, calm(), 2.0, 0).is_err());
        // too short for a single step
        assert!(generate_synthetic_walk(&SynthProfile::default(), calm(), 0.3, 0).is_err());
    }

    #[test]
    fn modulation_changes_cadence() {
        let mut profile = SynthProfile::default();
        profile.emotion_modulation.insert(
            EmotionQuadrant::Hvha,
            ProfileOffsets {
                step_frequency_hz: 0.4,
                ..Default::default()
            },
        );
        let excited = EmotionLabel::new(8.0, 8.0).unwrap();
        let a = generate_synthetic_walk(&profile, excited, 10.0, 0).unwrap();
        let b = generate_synthetic_walk(&profile, calm(), 10.0, 0).unwrap();
        let na = a.meta().events_s.as_ref().unwrap().len();
        let nb = b.meta().events_s.as_ref().unwrap().len();
        assert_eq!(na, 22);
        assert_eq!(nb, 18);
    }
}
