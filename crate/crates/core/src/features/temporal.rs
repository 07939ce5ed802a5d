//! Cycle-to-cycle perturbation measures and zero crossing rate.

use crate::diag::{Diagnostics, Warning};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TimeDomainFeatures {
    pub jitter: f64,
    pub shimmer: f64,
    pub jitter_rap: f64,
    pub zcr: f64,
}

fn positive(v: f64) -> bool {
    v >= 0.0
}

/// Interpolated zero crossing positions in samples: `(position, rising)`.
pub fn zero_crossings(x: &[f64]) -> Vec<(f64, bool)> {
    let mut out = Vec::new();
    for (i, w) in x.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if positive(a) != positive(b) {
            let frac = if a == b { 0.0 } else { -a / (b - a) };
            out.push((i as f64 + frac.clamp(0.0, 1.0), positive(b)));
        }
    }
    out
}

/// Mean absolute successive difference relative to the mean.
pub fn jitter(periods: &[f64]) -> f64 {
    relative_perturbation(periods)
}

pub fn shimmer(amplitudes: &[f64]) -> f64 {
    relative_perturbation(amplitudes)
}

fn relative_perturbation(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    if mean <= 0.0 {
        return 0.0;
    }
    let d = v.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (v.len() - 1) as f64;
    d / mean
}

/// Relative average perturbation over three-period neighbourhoods.
pub fn jitter_rap(periods: &[f64]) -> f64 {
    if periods.len() < 3 {
        return 0.0;
    }
    let mean = periods.iter().sum::<f64>() / periods.len() as f64;
    if mean <= 0.0 {
        return 0.0;
    }
    let d = periods
        .windows(3)
        .map(|w| (w[1] - (w[0] + w[1] + w[2]) / 3.0).abs())
        .sum::<f64>()
        / (periods.len() - 2) as f64;
    d / mean
}

pub fn time_domain_features(x: &[f64], fs: f64, diag: &mut Diagnostics) -> TimeDomainFeatures {
    let crossings = zero_crossings(x);
    let zcr = if crossings.len() >= 2 {
        let span = (crossings[crossings.len() - 1].0 - crossings[0].0) / fs;
        if span > 0.0 {
            (crossings.len() - 1) as f64 / span
        } else {
            0.0
        }
    } else {
        0.0
    };

    let rising: Vec<f64> = crossings.iter().filter(|c| c.1).map(|c| c.0).collect();
    let cycles = rising.len().saturating_sub(1);
    if cycles < 3 {
        diag.warn(Warning::InsufficientCycles);
        return TimeDomainFeatures {
            zcr,
            ..Default::default()
        };
    }
    let periods: Vec<f64> = rising.windows(2).map(|w| (w[1] - w[0]) / fs).collect();
    let amplitudes: Vec<f64> = rising
        .windows(2)
        .map(|w| {
            let lo = w[0].ceil() as usize;
            let hi = (w[1].floor() as usize).min(x.len() - 1);
            x[lo..=hi.max(lo)].iter().copied().fold(0.0f64, f64::max)
        })
        .collect();
    TimeDomainFeatures {
        jitter: jitter(&periods),
        shimmer: shimmer(&amplitudes),
        jitter_rap: jitter_rap(&periods),
        zcr,
    }
}
