//! Wavelet and Hilbert-Huang images and the fundamental frequency contour.

use crate::diag::{Diagnostics, Warning};
use crate::dsp::fft::{analytic, bin_frequencies};
use crate::dsp::Matrix;
use crate::error::Result;
use crate::preprocess::cwt::{cwt_magnitude, log_frequencies, MorseWavelet};

use super::emd::{emd, Emd};
use super::spectral::stft_magnitudes;
use super::FeatureConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeFrequencyFeatures {
    pub cwt_image: Matrix,
    pub hht_image: Matrix,
    pub f0_contour: Vec<f64>,
}

/// `|CWT|` over log-spaced frequencies, area-resampled in time.
pub fn cwt_image(x: &[f64], fs: f64, cfg: &FeatureConfig) -> Result<Matrix> {
    let (rows, cols) = cfg.cwt_image;
    let hi = cfg.cwt_range_hz.1.min(0.48 * fs);
    let freqs = log_frequencies(cfg.cwt_range_hz.0, hi, rows);
    let m = cwt_magnitude(x, fs, &freqs, &MorseWavelet::default())?;
    Ok(m.resample(rows, cols))
}

/// Instantaneous amplitude and frequency (Hz) of one mode.
pub fn instantaneous(imf: &[f64], fs: f64) -> (Vec<f64>, Vec<f64>) {
    let z = analytic(imf);
    let n = z.len();
    let amp: Vec<f64> = z.iter().map(|c| c.norm()).collect();
    let mut phase: Vec<f64> = z.iter().map(|c| c.arg()).collect();
    for i in 1..n {
        let mut d = phase[i] - phase[i - 1];
        while d > std::f64::consts::PI {
            d -= std::f64::consts::TAU;
        }
        while d < -std::f64::consts::PI {
            d += std::f64::consts::TAU;
        }
        phase[i] = phase[i - 1] + d;
    }
    let k = fs / std::f64::consts::TAU;
    let freq = (0..n)
        .map(|i| match n {
            0 | 1 => 0.0,
            _ if i == 0 => (phase[1] - phase[0]) * k,
            _ if i == n - 1 => (phase[n - 1] - phase[n - 2]) * k,
            _ => 0.5 * (phase[i + 1] - phase[i - 1]) * k,
        })
        .collect();
    (amp, freq)
}

/// Hilbert spectrum of the modes: mean instantaneous amplitude per
/// (linear frequency bin up to Nyquist, time column).
pub fn hht_image(decomp: &Emd, n: usize, fs: f64, rows: usize, cols: usize) -> Matrix {
    let mut sum = Matrix::zeros(rows, cols);
    if n == 0 || rows == 0 || cols == 0 {
        return sum;
    }
    let nyq = fs / 2.0;
    for imf in &decomp.imfs {
        let (amp, freq) = instantaneous(imf, fs);
        for i in 0..n {
            let f = freq[i];
            if !(f > 0.0 && f < nyq) {
                continue;
            }
            let r = ((f / nyq) * rows as f64).floor() as usize;
            let c = i * cols / n;
            let v = sum.get(r.min(rows - 1), c);
            sum.set(r.min(rows - 1), c, v + amp[i]);
        }
    }
    for c in 0..cols {
        let lo = (c * n).div_ceil(cols);
        let hi = ((c + 1) * n).div_ceil(cols);
        let count = hi.saturating_sub(lo).max(1) as f64;
        for r in 0..rows {
            let v = sum.get(r, c);
            sum.set(r, c, v / count);
        }
    }
    sum
}

/// Peak frequency of each short-time frame, excluding DC; 0 for silent frames.
pub fn f0_contour(x: &[f64], fs: f64, cfg: &FeatureConfig) -> Vec<f64> {
    let frames = stft_magnitudes(x, cfg.stft_frame, cfg.stft_hop, cfg.stft_nfft);
    let nfft = cfg.stft_nfft.max(cfg.stft_frame.min(x.len()));
    let freqs = bin_frequencies(nfft, fs);
    frames
        .iter()
        .map(|m| {
            let best = (1..m.len()).fold(None::<usize>, |b, k| match b {
                Some(j) if m[j] >= m[k] => Some(j),
                _ => Some(k),
            });
            match best {
                Some(k) if m[k] > 0.0 => freqs[k],
                _ => 0.0,
            }
        })
        .collect()
}

pub fn frame_count(len: usize, frame: usize, hop: usize) -> usize {
    let frame = frame.min(len).max(1);
    if len < frame {
        0
    } else {
        (len - frame) / hop.max(1) + 1
    }
}

pub fn time_frequency_features(
    x: &[f64],
    fs: f64,
    cfg: &FeatureConfig,
    diag: &mut Diagnostics,
) -> Result<TimeFrequencyFeatures> {
    if x.iter().all(|&v| v == 0.0) {
        diag.warn(Warning::ZeroSignal);
        let (cr, cc) = cfg.cwt_image;
        let (hr, hc) = cfg.hht_image;
        return Ok(TimeFrequencyFeatures {
            cwt_image: Matrix::zeros(cr, cc),
            hht_image: Matrix::zeros(hr, hc),
            f0_contour: vec![0.0; frame_count(x.len(), cfg.stft_frame, cfg.stft_hop)],
        });
    }
    let decomp = emd(x, &cfg.emd, diag);
    Ok(TimeFrequencyFeatures {
        cwt_image: cwt_image(x, fs, cfg)?,
        hht_image: hht_image(&decomp, x.len(), fs, cfg.hht_image.0, cfg.hht_image.1),
        f0_contour: f0_contour(x, fs, cfg),
    })
}
