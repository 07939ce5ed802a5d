//! Amplitude-distribution statistics of a segment.

use serde::{Deserialize, Serialize};

use crate::dsp::stats::{mean, median};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticalFeatures {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub max: f64,
    pub range: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub n_peaks: f64,
    pub n_valleys: f64,
    pub autocorr_lag1: f64,
    pub rise_slope: f64,
    pub fall_slope: f64,
}

impl StatisticalFeatures {
    pub const NAMES: [&'static str; 12] = [
        "mean",
        "median",
        "std",
        "max",
        "range",
        "skewness",
        "kurtosis",
        "n_peaks",
        "n_valleys",
        "autocorr_lag1",
        "rise_slope",
        "fall_slope",
    ];

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.mean,
            self.median,
            self.std,
            self.max,
            self.range,
            self.skewness,
            self.kurtosis,
            self.n_peaks,
            self.n_valleys,
            self.autocorr_lag1,
            self.rise_slope,
            self.fall_slope,
        ]
    }
}

pub fn statistical_features(x: &[f64], fs: f64) -> StatisticalFeatures {
    let n = x.len();
    let constant = x.iter().all(|&v| v == x[0]);
    let m = if constant && n > 0 { x[0] } else { mean(x) };
    let var = if n > 0 {
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64
    } else {
        0.0
    };
    let std = var.sqrt();
    // Degenerate variance: higher moments are defined as zero.
    let (skewness, kurtosis) = if var > 1e-300 && var > 1e-24 * m.abs().max(1.0).powi(2) {
        let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n as f64;
        let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n as f64;
        (m3 / std.powi(3), m4 / (var * var))
    } else {
        (0.0, 0.0)
    };
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let mut peaks = 0usize;
    let mut valleys = 0usize;
    for w in x.windows(3) {
        if w[1] > w[0] && w[1] > w[2] {
            peaks += 1;
        }
        if w[1] < w[0] && w[1] < w[2] {
            valleys += 1;
        }
    }
    let autocorr_lag1 = if var > 0.0 && n > 1 {
        x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / (var * n as f64)
    } else {
        0.0
    };
    let diffs = x.windows(2).map(|w| w[1] - w[0]);
    let (mut rise, mut fall) = (0.0f64, 0.0f64);
    for d in diffs {
        rise = rise.max(d);
        fall = fall.min(d);
    }
    StatisticalFeatures {
        mean: m,
        median: median(x),
        std,
        max: if n > 0 { max } else { 0.0 },
        range: if n > 0 { max - min } else { 0.0 },
        skewness,
        kurtosis,
        n_peaks: peaks as f64,
        n_valleys: valleys as f64,
        autocorr_lag1,
        rise_slope: rise * fs,
        fall_slope: fall * fs,
    }
}
