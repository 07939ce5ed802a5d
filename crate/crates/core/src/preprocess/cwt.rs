//! Continuous wavelet transform with the analytic generalized Morse wavelet.
//!
//! The transform is evaluated in the frequency domain: the zero-padded signal
//! spectrum is multiplied by the wavelet's frequency response at each scale
//! and inverted. Magnitudes are normalized so a unit-amplitude sinusoid at an
//! analysis frequency produces a coefficient magnitude of ~1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::fft::{fft_real, ifft_in_place, next_pow2};
use crate::dsp::Matrix;
use crate::error::{Error, Result};
use crate::signal::VibrationSignal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MorseWavelet {
    /// Symmetry parameter.
    pub gamma: f64,
    /// Time-bandwidth product squared, `beta * gamma`.
    pub time_bandwidth: f64,
}

impl Default for MorseWavelet {
    fn default() -> Self {
        Self {
            gamma: 3.0,
            time_bandwidth: 60.0,
        }
    }
}

impl MorseWavelet {
    pub fn beta(&self) -> f64 {
        self.time_bandwidth / self.gamma
    }

    /// Radian frequency of the response peak at unit scale.
    pub fn peak_radian(&self) -> f64 {
        (self.beta() / self.gamma).powf(1.0 / self.gamma)
    }

    /// Frequency response, peak value 2, zero for non-positive frequency.
    pub fn response(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        let (b, g) = (self.beta(), self.gamma);
        let ln_a = std::f64::consts::LN_2 + (b / g) * (1.0 + g.ln() - b.ln());
        (ln_a + b * omega.ln() - omega.powf(g)).exp()
    }

    /// Half-width of the wavelet's central window at analysis frequency `f`.
    pub fn half_support_s(&self, freq_hz: f64) -> f64 {
        self.time_bandwidth.sqrt() / (std::f64::consts::PI * freq_hz)
    }
}

fn validate(freqs: &[f64], fs: f64) -> Result<()> {
    let nyq = fs / 2.0;
    for &f in freqs {
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::InvalidBand(format!("frequency {f} must be positive")));
        }
        if f >= nyq {
            return Err(Error::InvalidBand(format!(
                "frequency {f} Hz at or above Nyquist {nyq} Hz"
            )));
        }
    }
    Ok(())
}

/// Complex coefficients, one row per analysis frequency.
pub fn cwt_complex_samples(
    x: &[f64],
    fs: f64,
    freqs: &[f64],
    wavelet: &MorseWavelet,
) -> Result<Vec<Vec<Complex64>>> {
    validate(freqs, fs)?;
    let n = x.len();
    if n == 0 || freqs.is_empty() {
        return Ok(vec![Vec::new(); freqs.len()]);
    }
    let f_min = freqs.iter().copied().fold(f64::INFINITY, f64::min);
    let pad = (4.0 * wavelet.half_support_s(f_min) * fs).ceil() as usize;
    let len = next_pow2(n + 2 * pad);
    let mut padded = vec![0.0; pad];
    padded.extend_from_slice(x);
    let spec = fft_real(&padded, len);
    let peak = wavelet.peak_radian();
    let mut rows = Vec::with_capacity(freqs.len());
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for &f in freqs {
        let scale = peak / (std::f64::consts::TAU * f / fs);
        for (k, (dst, src)) in buf.iter_mut().zip(&spec).enumerate() {
            let w = if k > 0 && k < len / 2 {
                let omega = std::f64::consts::TAU * k as f64 / len as f64;
                wavelet.response(scale * omega)
            } else {
                0.0
            };
            *dst = src * w;
        }
        ifft_in_place(&mut buf);
        rows.push(buf[pad..pad + n].to_vec());
    }
    Ok(rows)
}

pub fn cwt_complex(signal: &VibrationSignal, freqs: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    cwt_complex_samples(signal.samples(), signal.sample_rate_hz(), freqs, &MorseWavelet::default())
}

/// Coefficient magnitudes, `freqs.len() x signal.len()`.
pub fn cwt_magnitude(x: &[f64], fs: f64, freqs: &[f64], wavelet: &MorseWavelet) -> Result<Matrix> {
    let rows = cwt_complex_samples(x, fs, freqs, wavelet)?;
    let mags: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().map(|c| c.norm()).collect())
        .collect();
    Ok(Matrix::from_rows(&mags))
}

pub fn cwt(signal: &VibrationSignal, freqs: &[f64]) -> Result<Matrix> {
    cwt_magnitude(signal.samples(), signal.sample_rate_hz(), freqs, &MorseWavelet::default())
}

/// `count` log-spaced frequencies spanning `[low, high]` inclusive.
pub fn log_frequencies(low: f64, high: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![(low * high).sqrt()],
        _ => {
            let (a, b) = (low.ln(), high.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FS: f64 = 500.0;

    #[test]
    fn response_peaks_at_two() {
        let w = MorseWavelet::default();
        let p = w.peak_radian();
        assert!((w.response(p) - 2.0).abs() < 1e-12);
        assert!(w.response(p * 0.9) < 2.0 && w.response(p * 1.1) < 2.0);
        assert_eq!(w.response(-1.0), 0.0);
    }

    #[test]
    fn impulse_localized_in_every_row() {
        let mut x = vec![0.0; 1000];
        x[400] = 1.0;
        let freqs = log_frequencies(10.0, 200.0, 12);
        let m = cwt_magnitude(&x, FS, &freqs, &MorseWavelet::default()).unwrap();
        let w = MorseWavelet::default();
        for (r, &f) in freqs.iter().enumerate() {
            let row = m.row(r);
            let arg = crate::dsp::stats::argmax(row).unwrap() as i64;
            let tol = (w.half_support_s(f) * FS).ceil() as i64;
            assert!((arg - 400).abs() <= tol, "row {r}: {arg}");
        }
    }

    #[test]
    fn tone_selects_nearest_row() {
        let x: Vec<f64> = (0..1000)
            .map(|i| (std::f64::consts::TAU * 50.0 * i as f64 / FS).sin())
            .collect();
        let freqs = log_frequencies(20.0, 120.0, 15);
        let m = cwt_magnitude(&x, FS, &freqs, &MorseWavelet::default()).unwrap();
        // Brute force: the row with the largest time-averaged magnitude.
        let means: Vec<f64> = (0..freqs.len()).map(|r| crate::dsp::stats::mean(m.row(r))).collect();
        let best = crate::dsp::stats::argmax(&means).unwrap();
        let nearest = freqs
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 50.0).abs().total_cmp(&(b.1 - 50.0).abs()))
            .unwrap()
            .0;
        assert_eq!(best, nearest);
        // Unit tone gives ~unit magnitude away from the edges.
        let row = m.row(nearest);
        let mid = row[500];
        assert!((mid - w_gain(freqs[nearest])).abs() < 0.05, "{mid}");
    }

    fn w_gain(f: f64) -> f64 {
        let w = MorseWavelet::default();
        let scale = w.peak_radian() / (std::f64::consts::TAU * f / FS);
        w.response(scale * std::f64::consts::TAU * 50.0 / FS) / 2.0
    }

    #[test]
    fn zero_signal_zero_coefficients() {
        let m = cwt_magnitude(&[0.0; 300], FS, &[30.0, 60.0], &MorseWavelet::default()).unwrap();
        assert!(m.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nyquist_rejected() {
        let r = cwt_magnitude(&[0.0; 10], FS, &[250.0], &MorseWavelet::default());
        assert!(matches!(r, Err(Error::InvalidBand(_))));
        assert!(cwt_magnitude(&[0.0; 10], FS, &[0.0], &MorseWavelet::default()).is_err());
    }

    proptest! {
        #[test]
        fn linearity(xs in prop::collection::vec(-1.0f64..1.0, 64..200),
                     a in -3.0f64..3.0, b in -3.0f64..3.0, shift in 1usize..50) {
            let n = xs.len();
            let ys: Vec<f64> = (0..n).map(|i| xs[(i + shift) % n] * 0.5 - 0.1).collect();
            let combo: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| a * x + b * y).collect();
            let freqs = [35.0, 80.0, 160.0];
            let w = MorseWavelet::default();
            let cx = cwt_complex_samples(&xs, FS, &freqs, &w).unwrap();
            let cy = cwt_complex_samples(&ys, FS, &freqs, &w).unwrap();
            let cz = cwt_complex_samples(&combo, FS, &freqs, &w).unwrap();
            for r in 0..freqs.len() {
                let scale = cz[r].iter().map(|c| c.norm()).fold(1e-300f64, f64::max);
                for t in 0..n {
                    let lin = cx[r][t] * a + cy[r][t] * b;
                    prop_assert!((cz[r][t] - lin).norm() <= 1e-9 * scale.max(1.0));
                }
            }
        }
    }
}
