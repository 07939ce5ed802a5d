//! Spectral shape descriptors and their frame-difference (delta) variants.
//!
//! Moments use power weighting. Slope and decrease follow the usual audio
//! descriptor conventions: slope is the least-squares slope of magnitude
//! against frequency, decrease is `sum_k (m_k - m_0) / k / sum_k m_k`.

use serde::{Deserialize, Serialize};

use crate::diag::{Diagnostics, Warning};
use crate::dsp::fft::{bin_frequencies, hann, magnitude_spectrum};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralShape {
    pub centroid: f64,
    pub crest: f64,
    pub decrease: f64,
    pub entropy: f64,
    pub flatness: f64,
    pub flux: f64,
    pub kurtosis: f64,
    pub skewness: f64,
    pub rolloff: f64,
    pub slope: f64,
}

impl SpectralShape {
    pub const NAMES: [&'static str; 10] = [
        "centroid", "crest", "decrease", "entropy", "flatness", "flux", "kurtosis", "skewness",
        "rolloff", "slope",
    ];

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.centroid,
            self.crest,
            self.decrease,
            self.entropy,
            self.flatness,
            self.flux,
            self.kurtosis,
            self.skewness,
            self.rolloff,
            self.slope,
        ]
    }
}

/// Descriptors of one magnitude spectrum. `flux` is left at 0; it needs a
/// frame sequence (see [`spectral_flux`]).
pub fn spectral_shape(
    mags: &[f64],
    freqs: &[f64],
    rolloff_fraction: f64,
    diag: &mut Diagnostics,
) -> SpectralShape {
    let n = mags.len();
    let power: Vec<f64> = mags.iter().map(|m| m * m).collect();
    let total: f64 = power.iter().sum();
    if n == 0 || total <= 0.0 {
        diag.warn(Warning::ZeroSpectrum);
        return SpectralShape::default();
    }
    let centroid = freqs.iter().zip(&power).map(|(f, p)| f * p).sum::<f64>() / total;
    let var = freqs
        .iter()
        .zip(&power)
        .map(|(f, p)| (f - centroid).powi(2) * p)
        .sum::<f64>()
        / total;
    let (skewness, kurtosis) = if var > 0.0 {
        let sd = var.sqrt();
        let m3 = freqs.iter().zip(&power).map(|(f, p)| (f - centroid).powi(3) * p).sum::<f64>() / total;
        let m4 = freqs.iter().zip(&power).map(|(f, p)| (f - centroid).powi(4) * p).sum::<f64>() / total;
        (m3 / (sd * var), m4 / (var * var))
    } else {
        (0.0, 0.0)
    };

    let mean_mag = mags.iter().sum::<f64>() / n as f64;
    let max_mag = mags.iter().copied().fold(0.0f64, f64::max);
    let crest = max_mag / mean_mag;

    let mean_pow = total / n as f64;
    let flatness = if power.iter().any(|&p| p <= 0.0) {
        0.0
    } else {
        let log_mean = power.iter().map(|p| p.ln()).sum::<f64>() / n as f64;
        (log_mean.exp() / mean_pow).min(1.0)
    };

    let entropy = power
        .iter()
        .map(|p| p / total)
        .filter(|&q| q > 0.0)
        .map(|q| -q * q.ln())
        .sum::<f64>()
        .max(0.0);

    let target = rolloff_fraction * total;
    let mut acc = 0.0;
    let mut rolloff = freqs[n - 1];
    for (f, p) in freqs.iter().zip(&power) {
        acc += p;
        if acc >= target {
            rolloff = *f;
            break;
        }
    }

    let mean_f = freqs.iter().sum::<f64>() / n as f64;
    let sff = freqs.iter().map(|f| (f - mean_f).powi(2)).sum::<f64>();
    let slope = if sff > 0.0 {
        freqs.iter().zip(mags).map(|(f, m)| (f - mean_f) * (m - mean_mag)).sum::<f64>() / sff
    } else {
        0.0
    };

    let tail: f64 = mags.iter().skip(1).sum();
    let decrease = if tail > 0.0 {
        mags.iter()
            .enumerate()
            .skip(1)
            .map(|(k, m)| (m - mags[0]) / k as f64)
            .sum::<f64>()
            / tail
    } else {
        0.0
    };

    SpectralShape {
        centroid,
        crest,
        decrease,
        entropy,
        flatness,
        flux: 0.0,
        kurtosis,
        skewness,
        rolloff,
        slope,
    }
}

/// Hann-windowed short-time magnitude spectra, one row per frame.
pub fn stft_magnitudes(x: &[f64], frame: usize, hop: usize, nfft: usize) -> Vec<Vec<f64>> {
    let frame = frame.min(x.len()).max(1);
    let hop = hop.max(1);
    let window = hann(frame);
    let mut frames = Vec::new();
    let mut start = 0;
    while start + frame <= x.len() {
        frames.push(magnitude_spectrum(&x[start..start + frame], nfft.max(frame), Some(&window)));
        start += hop;
    }
    frames
}

/// Mean L2 distance between consecutive unit-sum normalized frames.
pub fn spectral_flux(frames: &[Vec<f64>]) -> f64 {
    if frames.len() < 2 {
        return 0.0;
    }
    let norm = |f: &Vec<f64>| -> Vec<f64> {
        let s: f64 = f.iter().sum();
        if s > 0.0 {
            f.iter().map(|v| v / s).collect()
        } else {
            vec![0.0; f.len()]
        }
    };
    let normed: Vec<Vec<f64>> = frames.iter().map(norm).collect();
    let total: f64 = normed
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt())
        .sum();
    total / (normed.len() - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralFeatures {
    pub shape: SpectralShape,
    pub delta: SpectralShape,
}

/// Static descriptors of the whole-segment spectrum plus STFT-based flux,
/// and the same descriptors of the mean absolute frame difference.
pub fn spectral_features(
    x: &[f64],
    fs: f64,
    nfft: usize,
    cfg: &super::FeatureConfig,
    diag: &mut Diagnostics,
) -> SpectralFeatures {
    let window = hann(x.len());
    let mags = magnitude_spectrum(x, nfft, Some(&window));
    let freqs = bin_frequencies(nfft, fs);
    let mut shape = spectral_shape(&mags, &freqs, cfg.rolloff_fraction, diag);

    let frames = stft_magnitudes(x, cfg.stft_frame, cfg.stft_hop, cfg.stft_nfft);
    shape.flux = spectral_flux(&frames);

    let frame_freqs = bin_frequencies(cfg.stft_nfft.max(cfg.stft_frame.min(x.len())), fs);
    let deltas: Vec<Vec<f64>> = frames
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| (b - a).abs()).collect())
        .collect();
    let mut delta = if deltas.is_empty() {
        SpectralShape::default()
    } else {
        let bins = deltas[0].len();
        let mean: Vec<f64> = (0..bins)
            .map(|k| deltas.iter().map(|d| d[k]).sum::<f64>() / deltas.len() as f64)
            .collect();
        // A stationary segment has no frame-to-frame change; that is not a
        // degenerate input, so its warning is not forwarded.
        let mut quiet = Diagnostics::new();
        spectral_shape(&mean, &frame_freqs, cfg.rolloff_fraction, &mut quiet)
    };
    delta.flux = spectral_flux(&deltas);
    SpectralFeatures { shape, delta }
}
