//! Gait-related features: cadence, contact timing, heel/toe balance, energy.

use crate::diag::{Diagnostics, Warning};
use crate::dsp::fft::band_envelope;
use crate::error::{Error, Result};

use super::FeatureConfig;

/// Cadence as the inverse of the mean inter-footstep interval.
pub fn step_frequency(peak_times_s: &[f64]) -> Result<f64> {
    if peak_times_s.len() < 2 {
        return Err(Error::InsufficientEvents {
            needed: 2,
            found: peak_times_s.len(),
        });
    }
    let span = peak_times_s[peak_times_s.len() - 1] - peak_times_s[0];
    let mean_interval = span / (peak_times_s.len() - 1) as f64;
    if mean_interval <= 0.0 {
        return Err(Error::InvalidArgument("peak times must increase".into()));
    }
    Ok(1.0 / mean_interval)
}

/// True when a band envelope carries negligible energy relative to the segment.
fn is_flat(env: &[f64], reference: f64) -> bool {
    let peak = env.iter().fold(0.0f64, |m, v| m.max(*v));
    peak <= 1e-6 * reference || peak == 0.0
}

fn abs_peak(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Location of the envelope maximum refined by a parabola through its
/// neighbours, in samples.
fn refined_argmax(env: &[f64]) -> f64 {
    let i = crate::dsp::stats::argmax(env).unwrap_or(0);
    if i == 0 || i + 1 >= env.len() {
        return i as f64;
    }
    let (a, b, c) = (env[i - 1], env[i], env[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom.abs() < 1e-300 {
        i as f64
    } else {
        i as f64 + 0.5 * (a - c) / denom
    }
}

/// Lag of the toe-off envelope peak after the heel-strike envelope peak.
pub fn double_support_time(x: &[f64], fs: f64, cfg: &FeatureConfig, diag: &mut Diagnostics) -> f64 {
    let reference = abs_peak(x);
    let hs = band_envelope(x, fs, cfg.hs_timing_band_hz.0, cfg.hs_timing_band_hz.1);
    let to = band_envelope(x, fs, cfg.to_timing_band_hz.0, cfg.to_timing_band_hz.1);
    if is_flat(&hs, reference) {
        diag.warn(Warning::FlatBand("heel-strike"));
        return 0.0;
    }
    if is_flat(&to, reference) {
        diag.warn(Warning::FlatBand("toe-off"));
        return 0.0;
    }
    (refined_argmax(&to) - refined_argmax(&hs)) / fs
}

/// Full width at half maximum of an envelope, in seconds, with linear
/// interpolation of the half-level crossings. Never below one sample period.
pub fn fwhm(env: &[f64], fs: f64) -> f64 {
    let min_width = 1.0 / fs;
    let Some(peak_i) = crate::dsp::stats::argmax(env) else {
        return min_width;
    };
    let half = env[peak_i] * 0.5;
    if half <= 0.0 {
        return min_width;
    }
    let mut left = 0.0;
    let mut i = peak_i;
    while i > 0 {
        if env[i - 1] < half {
            let (a, b) = (env[i - 1], env[i]);
            left = (i - 1) as f64 + (half - a) / (b - a);
            break;
        }
        i -= 1;
    }
    let mut right = (env.len() - 1) as f64;
    let mut j = peak_i;
    while j + 1 < env.len() {
        if env[j + 1] < half {
            let (a, b) = (env[j], env[j + 1]);
            right = j as f64 + (a - half) / (a - b);
            break;
        }
        j += 1;
    }
    ((right - left) / fs).max(min_width)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactShape {
    pub peak_ratio_hs_to: f64,
    pub fwhm_hs: f64,
    pub fwhm_to: f64,
}

pub fn peak_ratio_and_fwhm(
    x: &[f64],
    fs: f64,
    cfg: &FeatureConfig,
    diag: &mut Diagnostics,
) -> ContactShape {
    let reference = abs_peak(x);
    let hs = band_envelope(x, fs, cfg.hs_band_hz.0, cfg.hs_band_hz.1);
    let to = band_envelope(x, fs, cfg.to_band_hz.0, cfg.to_band_hz.1);
    let hs_max = hs.iter().fold(0.0f64, |m, v| m.max(*v));
    let to_max = to.iter().fold(0.0f64, |m, v| m.max(*v));
    let hs_flat = is_flat(&hs, reference);
    let to_flat = is_flat(&to, reference);
    let ratio = if to_flat {
        diag.warn(Warning::RatioCapped);
        if hs_flat {
            0.0
        } else {
            cfg.ratio_cap
        }
    } else if hs_flat {
        0.0
    } else {
        (hs_max / to_max).min(cfg.ratio_cap)
    };
    ContactShape {
        peak_ratio_hs_to: ratio,
        fwhm_hs: if hs_flat { 1.0 / fs } else { fwhm(&hs, fs) },
        fwhm_to: if to_flat { 1.0 / fs } else { fwhm(&to, fs) },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyContours {
    pub raw: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub log: Vec<f64>,
}

/// Centred moving average; the window shrinks symmetrically near the ends
/// and even spans are reduced by one.
pub fn moving_average(x: &[f64], span: usize) -> Vec<f64> {
    let span = if span % 2 == 0 { span.saturating_sub(1) } else { span }.max(1);
    let half = span / 2;
    let n = x.len();
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let w = &x[i - h..=i + h];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect()
}

pub fn energy_window_count(len: usize, fs: f64, window_s: f64) -> usize {
    let w = ((window_s * fs).round() as usize).max(1);
    len / w
}

/// Non-overlapping window energies plus smoothed and log forms.
pub fn energy_contours(x: &[f64], fs: f64, window_s: f64, smooth_span_s: f64, eps: f64) -> EnergyContours {
    let w = ((window_s * fs).round() as usize).max(1);
    let raw: Vec<f64> = x.chunks_exact(w).map(|c| c.iter().map(|v| v * v).sum()).collect();
    let span = (smooth_span_s / window_s).round().max(1.0) as usize;
    let smoothed = moving_average(&raw, span);
    let log = raw.iter().map(|e| (e + eps).ln()).collect();
    EnergyContours { raw, smoothed, log }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 500.0;

    fn burst(n: usize, center_s: f64, sigma_s: f64, freq: f64, amp: f64) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let t = i as f64 / FS - center_s;
                amp * (-0.5 * (t / sigma_s).powi(2)).exp() * (std::f64::consts::TAU * freq * t).cos()
            })
            .collect()
    }

    fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    #[test]
    fn step_frequency_examples() {
        assert!((step_frequency(&[0.0, 0.5, 1.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!((step_frequency(&[0.0, 0.4, 1.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(
            step_frequency(&[0.3]),
            Err(Error::InsufficientEvents { needed: 2, found: 1 })
        ));
    }

    #[test]
    fn double_support_from_burst_centres() {
        let heel = burst(175, 0.10, 0.006, 150.0, 1.0);
        let toe = burst(175, 0.25, 0.02, 25.0, 0.5);
        let mut d = Diagnostics::new();
        let dst = double_support_time(&add(&heel, &toe), FS, &FeatureConfig::default(), &mut d);
        assert!((dst - 0.15).abs() <= 0.01, "{dst}");
        assert!(d.is_empty());
    }

    #[test]
    fn coincident_bursts_zero_lag() {
        let heel = burst(175, 0.15, 0.006, 150.0, 1.0);
        let toe = burst(175, 0.15, 0.02, 25.0, 0.5);
        let mut d = Diagnostics::new();
        let dst = double_support_time(&add(&heel, &toe), FS, &FeatureConfig::default(), &mut d);
        assert!(dst.abs() < 0.004, "{dst}");
    }

    #[test]
    fn heel_only_is_flat() {
        let heel = burst(175, 0.15, 0.02, 150.0, 1.0);
        let mut d = Diagnostics::new();
        let dst = double_support_time(&heel, FS, &FeatureConfig::default(), &mut d);
        assert_eq!(dst, 0.0);
        assert!(d.contains(&Warning::FlatBand("toe-off")));
    }

    #[test]
    fn gaussian_fwhm() {
        let sigma = 0.020;
        let env: Vec<f64> = (0..175)
            .map(|i| (-0.5 * ((i as f64 / FS - 0.17) / sigma).powi(2)).exp())
            .collect();
        let expected = 2.0 * (2.0 * 2f64.ln()).sqrt() * sigma;
        assert!((fwhm(&env, FS) - expected).abs() <= 1.0 / FS);
        // Through the band envelope path as well.
        let x = burst(175, 0.17, sigma, 150.0, 1.0);
        let mut d = Diagnostics::new();
        let shape = peak_ratio_and_fwhm(&x, FS, &FeatureConfig::default(), &mut d);
        assert!((shape.fwhm_hs - expected).abs() <= 1.0 / FS, "{}", shape.fwhm_hs);
    }

    #[test]
    fn peak_ratios() {
        let cfg = FeatureConfig::default();
        let mut d = Diagnostics::new();
        for (amp_hi, amp_lo, want) in [(1.0, 1.0, 1.0), (2.0, 1.0, 2.0)] {
            let x = add(
                &burst(175, 0.12, 0.012, 170.0, amp_hi),
                &burst(175, 0.20, 0.03, 22.0, amp_lo),
            );
            let r = peak_ratio_and_fwhm(&x, FS, &cfg, &mut d).peak_ratio_hs_to;
            assert!((r - want).abs() / want <= 0.05, "{r} vs {want}");
        }
    }

    #[test]
    fn ratio_capped_without_toe() {
        let cfg = FeatureConfig::default();
        let mut d = Diagnostics::new();
        let r = peak_ratio_and_fwhm(&burst(175, 0.1, 0.01, 170.0, 1.0), FS, &cfg, &mut d);
        assert_eq!(r.peak_ratio_hs_to, cfg.ratio_cap);
        assert!(d.contains(&Warning::RatioCapped));
    }

    #[test]
    fn energy_examples() {
        let e = energy_contours(&[1.0; 175], FS, 0.05, 0.5, 1e-12);
        assert_eq!(e.raw, vec![25.0; 7]);
        assert_eq!(e.smoothed, vec![25.0; 7]);
        let z = energy_contours(&[0.0; 175], FS, 0.05, 0.5, 1e-12);
        assert!(z.raw.iter().all(|&v| v == 0.0));
        assert!(z.log.iter().all(|&v| v == 1e-12f64.ln()));
        let mut imp = vec![0.0; 175];
        imp[60] = 3.0;
        let e = energy_contours(&imp, FS, 0.05, 0.5, 1e-12);
        assert_eq!(e.raw, vec![0.0, 0.0, 9.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn moving_average_shrinks_at_edges() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(moving_average(&x, 3), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let y = [0.0, 0.0, 9.0, 0.0, 0.0];
        assert_eq!(moving_average(&y, 3), vec![0.0, 3.0, 3.0, 3.0, 0.0]);
    }
}
