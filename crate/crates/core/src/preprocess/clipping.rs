//! Detection and polynomial repair of sensor saturation.

use serde::{Deserialize, Serialize};

use crate::diag::{Diagnostics, Warning};
use crate::dsp::lstsq::polyfit;
use crate::error::Result;
use crate::signal::VibrationSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Upper,
    Lower,
}

/// Inclusive index range of samples pinned at the sensor limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClippedRun {
    pub start: usize,
    pub end: usize,
    pub polarity: Polarity,
}

impl ClippedRun {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

const LIMIT_TOLERANCE: f64 = 1e-9;

fn polarity_of(x: f64, limit: f64) -> Option<Polarity> {
    let tol = LIMIT_TOLERANCE * limit;
    if (x - limit).abs() <= tol {
        Some(Polarity::Upper)
    } else if (x + limit).abs() <= tol {
        Some(Polarity::Lower)
    } else {
        None
    }
}

/// Maximal runs of at least `min_run` samples at `+limit` or `-limit`.
pub fn detect_clipping(signal: &VibrationSignal, limit: f64, min_run: usize) -> Vec<ClippedRun> {
    let x = signal.samples();
    let mut runs = Vec::new();
    let mut i = 0;
    while i < x.len() {
        let Some(pol) = polarity_of(x[i], limit) else {
            i += 1;
            continue;
        };
        let start = i;
        while i + 1 < x.len() && polarity_of(x[i + 1], limit) == Some(pol) {
            i += 1;
        }
        if i - start + 1 >= min_run.max(1) {
            runs.push(ClippedRun {
                start,
                end: i,
                polarity: pol,
            });
        }
        i += 1;
    }
    runs
}

#[derive(Debug, Clone)]
pub struct Repair {
    pub signal: VibrationSignal,
    /// Runs left at the limit for lack of clean neighbours on both sides.
    pub unrepaired: Vec<ClippedRun>,
    pub diagnostics: Diagnostics,
}

/// Replace each run with a least-squares polynomial through up to
/// `n_neighbors` unclipped samples on each side.
pub fn repair_clipping(
    signal: &VibrationSignal,
    runs: &[ClippedRun],
    poly_order: usize,
    n_neighbors: usize,
) -> Result<Repair> {
    let x = signal.samples();
    let n = x.len();
    let mut clipped = vec![false; n];
    for r in runs {
        for c in clipped.iter_mut().take(r.end.min(n - 1) + 1).skip(r.start) {
            *c = true;
        }
    }
    let min_side = (poly_order + 1).div_ceil(2);
    let mut out = x.to_vec();
    let mut unrepaired = Vec::new();
    let mut diagnostics = Diagnostics::new();

    for r in runs {
        let mut left = Vec::new();
        let mut i = r.start;
        while i > 0 && left.len() < n_neighbors {
            i -= 1;
            if clipped[i] {
                break;
            }
            left.push(i);
        }
        let mut right = Vec::new();
        let mut j = r.end + 1;
        while j < n && right.len() < n_neighbors {
            if clipped[j] {
                break;
            }
            right.push(j);
            j += 1;
        }
        if left.len() < min_side || right.len() < min_side {
            diagnostics.warn(Warning::UnrepairedClip {
                start: r.start,
                end: r.end,
            });
            unrepaired.push(*r);
            continue;
        }
        let idx: Vec<usize> = left.iter().rev().chain(right.iter()).copied().collect();
        let xs: Vec<f64> = idx.iter().map(|&k| k as f64).collect();
        let ys: Vec<f64> = idx.iter().map(|&k| x[k]).collect();
        let order = poly_order.min(xs.len() - 1);
        match polyfit(&xs, &ys, order) {
            Some(poly) => {
                for (k, v) in out.iter_mut().enumerate().take(r.end + 1).skip(r.start) {
                    *v = poly.eval(k as f64);
                }
            }
            None => {
                diagnostics.warn(Warning::UnrepairedClip {
                    start: r.start,
                    end: r.end,
                });
                unrepaired.push(*r);
            }
        }
    }
    Ok(Repair {
        signal: signal.with_samples(out)?,
        unrepaired,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(x: Vec<f64>) -> VibrationSignal {
        VibrationSignal::from_samples(x, 500.0).unwrap()
    }

    #[test]
    fn run_of_three_detected_two_ignored() {
        let s = sig(vec![0.0, 1.0, 1.0, 1.0, 0.5, -1.0, -1.0, 0.0]);
        let runs = detect_clipping(&s, 1.0, 3);
        assert_eq!(
            runs,
            vec![ClippedRun {
                start: 1,
                end: 3,
                polarity: Polarity::Upper
            }]
        );
        let s2 = sig(vec![0.0, 1.0, 1.0, 0.0]);
        assert!(detect_clipping(&s2, 1.0, 3).is_empty());
    }

    fn clipped_sine() -> (Vec<f64>, Vec<f64>) {
        let clean: Vec<f64> = (0..500)
            .map(|i| 2.0 * (std::f64::consts::TAU * 10.0 * i as f64 / 500.0).sin())
            .collect();
        let clipped = clean.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        (clean, clipped)
    }

    #[test]
    fn sine_runs_match_analytic_crossings() {
        let (clean, clipped) = clipped_sine();
        let runs = detect_clipping(&sig(clipped), 1.0, 3);
        // Oracle: indices where |2 sin| >= 1, grouped into maximal runs.
        let mut expected = Vec::new();
        let mut i = 0;
        while i < clean.len() {
            if clean[i].abs() >= 1.0 {
                let s = i;
                while i + 1 < clean.len() && clean[i + 1].abs() >= 1.0 && clean[i + 1].signum() == clean[s].signum() {
                    i += 1;
                }
                expected.push((s, i));
            }
            i += 1;
        }
        assert_eq!(runs.len(), expected.len());
        for (r, (s, e)) in runs.iter().zip(expected) {
            assert!(r.start.abs_diff(s) <= 1 && r.end.abs_diff(e) <= 1, "{r:?} vs ({s}, {e})");
        }
    }

    #[test]
    fn sine_repair_rmse() {
        let (clean, clipped) = clipped_sine();
        let s = sig(clipped.clone());
        let runs = detect_clipping(&s, 1.0, 3);
        let rep = repair_clipping(&s, &runs, 4, 8).unwrap();
        let mut se = 0.0;
        let mut count = 0;
        for r in runs.iter().filter(|r| !rep.unrepaired.contains(r)) {
            for k in r.start..=r.end {
                se += (rep.signal.samples()[k] - clean[k]).powi(2);
                count += 1;
            }
        }
        let rmse = (se / count as f64).sqrt();
        assert!(rmse <= 0.2, "rmse {rmse}");
        // untouched samples are bit-identical
        let mut in_run = vec![false; clipped.len()];
        for r in &runs {
            for k in r.start..=r.end {
                in_run[k] = true;
            }
        }
        for k in 0..clipped.len() {
            if !in_run[k] {
                assert_eq!(rep.signal.samples()[k].to_bits(), clipped[k].to_bits());
            }
        }
    }

    #[test]
    fn empty_runs_identity() {
        let s = sig(vec![0.1, 0.2, 0.3]);
        let rep = repair_clipping(&s, &[], 3, 8).unwrap();
        assert_eq!(rep.signal, s);
        assert!(rep.unrepaired.is_empty());
    }

    #[test]
    fn all_clipped_falls_back() {
        let s = sig(vec![1.0; 40]);
        let runs = detect_clipping(&s, 1.0, 3);
        assert_eq!(runs.len(), 1);
        let rep = repair_clipping(&s, &runs, 3, 8).unwrap();
        assert_eq!(rep.unrepaired, runs);
        assert!(rep.signal.samples().iter().all(|&v| v == 1.0));
        assert!(!rep.diagnostics.is_empty());
    }
}
