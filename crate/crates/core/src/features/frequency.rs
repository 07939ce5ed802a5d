//! Fourier magnitudes, harmonic ratio and real cepstrum.

use crate::dsp::fft::{fft_real, hann, ifft_in_place, magnitude_spectrum, next_pow2};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyFeatures {
    pub fft_magnitude: Vec<f64>,
    pub harmonic_ratio: f64,
    pub cepstrum: Vec<f64>,
}

pub fn fft_len(segment_len: usize) -> usize {
    next_pow2(segment_len)
}

/// Even-to-odd harmonic power ratio of the strongest peak inside `band_hz`.
/// Each harmonic collects the power of its nearest bin and both neighbours.
pub fn harmonic_ratio(mags: &[f64], nfft: usize, fs: f64, band_hz: (f64, f64)) -> f64 {
    let df = fs / nfft as f64;
    let lo = (band_hz.0 / df).ceil() as usize;
    let hi = ((band_hz.1 / df).floor() as usize).min(mags.len().saturating_sub(1));
    if lo > hi || lo == 0 {
        return 0.0;
    }
    let k0 = (lo..=hi)
        .max_by(|&a, &b| mags[a].total_cmp(&mags[b]).then(b.cmp(&a)))
        .unwrap_or(lo);
    if mags[k0] <= 0.0 {
        return 0.0;
    }
    let power_near = |k: usize| -> f64 {
        let a = k.saturating_sub(1);
        let b = (k + 1).min(mags.len() - 1);
        mags[a..=b].iter().map(|m| m * m).sum()
    };
    let (mut even, mut odd) = (0.0, 0.0);
    let mut h = 1;
    while h * k0 < mags.len() {
        if h % 2 == 0 {
            even += power_near(h * k0);
        } else {
            odd += power_near(h * k0);
        }
        h += 1;
    }
    if odd > 0.0 {
        even / odd
    } else {
        0.0
    }
}

/// First `count` real cepstral coefficients of the Hann-windowed segment.
pub fn cepstrum(x: &[f64], nfft: usize, count: usize, eps: f64) -> Vec<f64> {
    let window = hann(x.len());
    let xs: Vec<f64> = x.iter().zip(&window).map(|(a, b)| a * b).collect();
    let spec = fft_real(&xs, nfft);
    let mut logmag: Vec<Complex64> = spec
        .iter()
        .map(|c| Complex64::new((c.norm() + eps).ln(), 0.0))
        .collect();
    ifft_in_place(&mut logmag);
    logmag.iter().take(count).map(|c| c.re).chain(std::iter::repeat(0.0)).take(count).collect()
}

pub fn frequency_features(
    x: &[f64],
    fs: f64,
    cfg: &super::FeatureConfig,
) -> FrequencyFeatures {
    let nfft = fft_len(x.len());
    let window = hann(x.len());
    let mags = magnitude_spectrum(x, nfft, Some(&window));
    let harmonic_ratio = harmonic_ratio(&mags, nfft, fs, cfg.harmonic_band_hz);
    FrequencyFeatures {
        cepstrum: cepstrum(x, nfft, cfg.cepstrum_len, cfg.log_epsilon),
        fft_magnitude: mags,
        harmonic_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureConfig;

    #[test]
    fn impulse_flat_spectrum() {
        let mut x = vec![0.0; 64];
        x[5] = 2.0;
        let m = magnitude_spectrum(&x, 64, None);
        assert!(m.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn parseval() {
        let x: Vec<f64> = (0..128).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.3).collect();
        let spec = fft_real(&x, x.len());
        let lhs: f64 = x.iter().map(|v| v * v).sum();
        let rhs: f64 = spec.iter().map(|c| c.norm_sqr()).sum::<f64>() / x.len() as f64;
        assert!((lhs - rhs).abs() <= 1e-9 * lhs);
    }

    #[test]
    fn shape_and_nonnegative() {
        let x: Vec<f64> = (0..175).map(|i| (i as f64 * 0.3).sin()).collect();
        let f = frequency_features(&x, 500.0, &FeatureConfig::default());
        assert_eq!(f.fft_magnitude.len(), 129);
        assert_eq!(f.cepstrum.len(), 20);
        assert!(f.fft_magnitude.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn harmonic_ratio_of_even_rich_signal() {
        let fs = 500.0;
        // f0 = 50 Hz with a strong 2nd harmonic and weak 3rd.
        let x: Vec<f64> = (0..256)
            .map(|i| {
                let t = i as f64 / fs;
                let w = std::f64::consts::TAU * 50.0 * t;
                w.sin() + 0.5 * (2.0 * w).sin() + 0.1 * (3.0 * w).sin()
            })
            .collect();
        let mags = magnitude_spectrum(&x, 256, Some(&hann(256)));
        let r = harmonic_ratio(&mags, 256, fs, (30.0, 70.0));
        // power ratio ~ 0.25 / (1 + 0.01)
        assert!((r - 0.25 / 1.01).abs() < 0.05, "{r}");
    }

    #[test]
    fn cepstrum_of_scaled_signal_shifts_c0() {
        let x: Vec<f64> = (0..175).map(|i| (i as f64 * 0.7).sin() + 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| v * 3.0).collect();
        let cx = cepstrum(&x, 256, 20, 0.0);
        let cy = cepstrum(&y, 256, 20, 0.0);
        assert!((cy[0] - cx[0] - 3f64.ln()).abs() < 1e-9);
        for k in 1..20 {
            assert!((cy[k] - cx[k]).abs() < 1e-9);
        }
    }
}
