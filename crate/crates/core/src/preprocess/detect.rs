//! Footstep detection from band-summed wavelet magnitude.

use serde::{Deserialize, Serialize};

use super::cwt::{cwt_magnitude, log_frequencies, MorseWavelet};
use crate::dsp::stats::{mad, median};
use crate::error::{Error, Result};
use crate::signal::VibrationSignal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    /// Structural band in which footstep impulses dominate.
    pub band_hz: (f64, f64),
    /// Number of analysis frequencies summed across the band.
    pub voices: usize,
    /// Threshold is `median + threshold_mads * MAD` of the band sum.
    pub threshold_mads: f64,
    pub min_spacing_s: f64,
    pub wavelet: MorseWavelet,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            band_hz: (30.0, 70.0),
            voices: 8,
            threshold_mads: 4.0,
            min_spacing_s: 0.3,
            wavelet: MorseWavelet::default(),
        }
    }
}

/// Sum of CWT magnitudes over the detection band, one value per sample.
pub fn band_energy(signal: &VibrationSignal, cfg: &DetectConfig) -> Result<Vec<f64>> {
    let (lo, hi) = cfg.band_hz;
    let fs = signal.sample_rate_hz();
    if !(lo > 0.0 && hi > lo && hi < fs / 2.0) {
        return Err(Error::InvalidBand(format!(
            "detection band ({lo}, {hi}) must lie inside (0, {})",
            fs / 2.0
        )));
    }
    let freqs = log_frequencies(lo, hi, cfg.voices.max(1));
    let m = cwt_magnitude(signal.samples(), fs, &freqs, &cfg.wavelet)?;
    let mut sum = vec![0.0; signal.len()];
    for r in 0..m.rows {
        for (s, v) in sum.iter_mut().zip(m.row(r)) {
            *s += v;
        }
    }
    Ok(sum)
}

/// Sample indices of detected footsteps, strictly increasing, pairwise at
/// least `min_spacing_s` apart.
pub fn detect_footsteps(signal: &VibrationSignal, cfg: &DetectConfig) -> Result<Vec<usize>> {
    let energy = band_energy(signal, cfg)?;
    let n = energy.len();
    if n < 3 {
        return Ok(Vec::new());
    }
    let fs = signal.sample_rate_hz();
    let threshold = median(&energy) + cfg.threshold_mads * mad(&energy);
    let edge = (cfg.wavelet.half_support_s(cfg.band_hz.0) * fs).ceil() as usize;
    let spacing = (cfg.min_spacing_s * fs).ceil() as usize;

    let mut candidates: Vec<usize> = (1..n - 1)
        .filter(|&i| {
            energy[i] > threshold
                && energy[i] > energy[i - 1]
                && energy[i] >= energy[i + 1]
                && i >= edge
                && i + edge < n
        })
        .collect();
    candidates.sort_by(|&a, &b| energy[b].total_cmp(&energy[a]).then(a.cmp(&b)));

    let mut accepted: Vec<usize> = Vec::new();
    for c in candidates {
        if accepted.iter().all(|&a| a.abs_diff(c) >= spacing) {
            accepted.push(c);
        }
    }
    accepted.sort_unstable();
    Ok(accepted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{generate_synthetic_walk, EmotionLabel, SignalMeta, SynthProfile};

    fn label() -> EmotionLabel {
        EmotionLabel::new(3.0, 3.0).unwrap()
    }

    #[test]
    fn zero_signal_no_detections() {
        let s = VibrationSignal::from_samples(vec![0.0; 2000], 500.0).unwrap();
        assert!(detect_footsteps(&s, &DetectConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn two_events_located() {
        // Events at 1.0 s and 1.6 s: build a 2.6 s walk at 1/0.6 Hz, whose
        // nominal times are 0.3, 0.9, ... then keep only the ground truth.
        let profile = SynthProfile {
            step_frequency_hz: 1.0 / 0.6,
            noise_rms: 0.05,
            ..Default::default()
        };
        let walk = generate_synthetic_walk(&profile, label(), 2.4, 9).unwrap();
        let truth = walk.meta().events_s.clone().unwrap();
        assert!(truth.iter().any(|t| (t - 0.9).abs() < 1e-9));
        // Shift by 0.1 s so events fall at 1.0 s and 1.6 s.
        let shift = 50;
        let mut shifted = vec![0.0; shift];
        shifted.extend_from_slice(walk.samples());
        let sig = VibrationSignal::new(shifted, SignalMeta::new(500.0)).unwrap();
        let peaks = detect_footsteps(&sig, &DetectConfig::default()).unwrap();
        for t in [1.0, 1.6] {
            let hit = peaks.iter().any(|&p| (p as f64 / 500.0 - t).abs() <= 0.02);
            assert!(hit, "no detection near {t}: {peaks:?}");
        }
    }

    #[test]
    fn two_hertz_walk_count() {
        let profile = SynthProfile {
            step_frequency_hz: 2.0,
            noise_rms: 0.05,
            ..Default::default()
        };
        let walk = generate_synthetic_walk(&profile, label(), 10.0, 4).unwrap();
        let peaks = detect_footsteps(&walk, &DetectConfig::default()).unwrap();
        assert!((19..=21).contains(&peaks.len()), "{}", peaks.len());
    }

    #[test]
    fn spacing_and_order() {
        let profile = SynthProfile {
            step_frequency_hz: 2.4,
            noise_rms: 0.2,
            step_jitter_s: 0.02,
            ..Default::default()
        };
        let walk = generate_synthetic_walk(&profile, label(), 8.0, 11).unwrap();
        let peaks = detect_footsteps(&walk, &DetectConfig::default()).unwrap();
        for w in peaks.windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] - w[0]) as f64 / 500.0 >= 0.3);
        }
    }

    #[test]
    fn translation_equivariance() {
        let profile = SynthProfile {
            step_frequency_hz: 1.5,
            noise_rms: 0.0,
            ..Default::default()
        };
        let walk = generate_synthetic_walk(&profile, label(), 6.0, 2).unwrap();
        let base = detect_footsteps(&walk, &DetectConfig::default()).unwrap();
        for k in [1usize, 7, 33] {
            let mut shifted = vec![0.0; k];
            shifted.extend_from_slice(&walk.samples()[..walk.len() - k]);
            let sig = walk.with_samples(shifted).unwrap();
            let moved = detect_footsteps(&sig, &DetectConfig::default()).unwrap();
            let expected: Vec<usize> = base
                .iter()
                .map(|p| p + k)
                .filter(|&p| p + 60 < walk.len())
                .collect();
            let got: Vec<usize> = moved.into_iter().filter(|&p| p + 60 < walk.len()).collect();
            assert_eq!(got, expected, "shift {k}");
        }
    }

    #[test]
    fn band_above_nyquist_rejected() {
        let s = VibrationSignal::from_samples(vec![0.0; 100], 100.0).unwrap();
        assert!(matches!(
            detect_footsteps(&s, &DetectConfig::default()),
            Err(Error::InvalidBand(_))
        ));
    }
}
