//! FFT helpers on top of `rustfft`.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Forward DFT of a real sequence zero-padded to `len` (no normalization).
pub fn fft_real(x: &[f64], len: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x
        .iter()
        .take(len)
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    buf.resize(len, Complex64::new(0.0, 0.0));
    fft_in_place(&mut buf);
    buf
}

pub fn fft_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

/// Inverse DFT scaled by `1/N`.
pub fn ifft_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![1.0; n];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos())
        .collect()
}

/// One-sided magnitude spectrum `|X[k]|`, `k = 0..=len/2`.
pub fn magnitude_spectrum(x: &[f64], len: usize, window: Option<&[f64]>) -> Vec<f64> {
    let xs: Vec<f64> = match window {
        Some(w) => x.iter().zip(w).map(|(a, b)| a * b).collect(),
        None => x.to_vec(),
    };
    fft_real(&xs, len)
        .iter()
        .take(len / 2 + 1)
        .map(|c| c.norm())
        .collect()
}

/// Frequencies of the one-sided bins for an FFT of length `len`.
pub fn bin_frequencies(len: usize, sample_rate_hz: f64) -> Vec<f64> {
    (0..=len / 2)
        .map(|k| k as f64 * sample_rate_hz / len as f64)
        .collect()
}

/// Analytic signal of `x` restricted to `[low_hz, high_hz]`.
///
/// The signal is zero padded to at least twice its length; positive-frequency
/// bins inside the band are doubled, everything else is zeroed.
pub fn band_analytic(x: &[f64], sample_rate_hz: f64, low_hz: f64, high_hz: f64) -> Vec<Complex64> {
    let n = x.len();
    let len = next_pow2(2 * n);
    let mut spec = fft_real(x, len);
    let df = sample_rate_hz / len as f64;
    for (k, c) in spec.iter_mut().enumerate() {
        let f = k as f64 * df;
        let keep = k > 0 && k < len / 2 && f >= low_hz && f <= high_hz;
        if keep {
            *c *= 2.0;
        } else {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    ifft_in_place(&mut spec);
    spec.truncate(n);
    spec
}

/// Full-band analytic signal (Hilbert transform via FFT).
pub fn analytic(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut spec = fft_real(x, n);
    let half = n / 2;
    for (k, c) in spec.iter_mut().enumerate() {
        let gain = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else if k <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *c *= gain;
    }
    ifft_in_place(&mut spec);
    spec
}

/// Envelope `|analytic|` of the band-limited signal.
pub fn band_envelope(x: &[f64], sample_rate_hz: f64, low_hz: f64, high_hz: f64) -> Vec<f64> {
    band_analytic(x, sample_rate_hz, low_hz, high_hz)
        .iter()
        .map(|c| c.norm())
        .collect()
}
