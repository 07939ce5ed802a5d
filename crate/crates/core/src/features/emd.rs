//! Empirical mode decomposition by envelope-mean sifting.

use serde::{Deserialize, Serialize};

use crate::diag::{Diagnostics, Warning};
use crate::dsp::spline::natural_cubic_on_grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmdConfig {
    /// Sifting stops when the normalized squared change falls below this.
    pub sd_threshold: f64,
    pub max_imfs: usize,
    pub max_sifts: usize,
}

impl Default for EmdConfig {
    fn default() -> Self {
        Self {
            sd_threshold: 0.25,
            max_imfs: 8,
            max_sifts: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Emd {
    pub imfs: Vec<Vec<f64>>,
    pub residue: Vec<f64>,
}

fn extrema(x: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        if x[i] > x[i - 1] && x[i] >= x[i + 1] {
            maxima.push(i);
        } else if x[i] < x[i - 1] && x[i] <= x[i + 1] {
            minima.push(i);
        }
    }
    (maxima, minima)
}

/// Spline envelope through extrema, with the outermost extrema mirrored
/// about both ends of the signal to tame end swing.
fn envelope(x: &[f64], idx: &[usize]) -> Vec<f64> {
    let n = x.len();
    let last = (n - 1) as f64;
    let mut xs = Vec::with_capacity(idx.len() + 4);
    let mut ys = Vec::with_capacity(idx.len() + 4);
    for &i in idx.iter().take(2).rev() {
        xs.push(-(i as f64));
        ys.push(x[i]);
    }
    for &i in idx {
        xs.push(i as f64);
        ys.push(x[i]);
    }
    for &i in idx.iter().rev().take(2) {
        xs.push(2.0 * last - i as f64);
        ys.push(x[i]);
    }
    natural_cubic_on_grid(&xs, &ys, n)
}

fn is_residue(x: &[f64]) -> bool {
    let (maxima, minima) = extrema(x);
    maxima.len() < 2 || minima.len() < 2
}

/// Decompose `x` into intrinsic mode functions plus a residue whose sum
/// reproduces `x`.
pub fn emd(x: &[f64], cfg: &EmdConfig, diag: &mut Diagnostics) -> Emd {
    let mut residue = x.to_vec();
    let mut imfs = Vec::new();
    let scale = x.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Emd { imfs, residue };
    }
    while imfs.len() < cfg.max_imfs && !is_residue(&residue) {
        let mut h = residue.clone();
        let mut converged = false;
        for _ in 0..cfg.max_sifts {
            let (maxima, minima) = extrema(&h);
            if maxima.len() < 2 || minima.len() < 2 {
                converged = true;
                break;
            }
            let upper = envelope(&h, &maxima);
            let lower = envelope(&h, &minima);
            let next: Vec<f64> = h
                .iter()
                .zip(upper.iter().zip(&lower))
                .map(|(v, (u, l))| v - 0.5 * (u + l))
                .collect();
            let num: f64 = h.iter().zip(&next).map(|(a, b)| (a - b).powi(2)).sum();
            let den: f64 = h.iter().map(|a| a * a).sum();
            h = next;
            if den == 0.0 || num / den < cfg.sd_threshold {
                converged = true;
                break;
            }
        }
        if !converged {
            diag.warn(Warning::EmdNotConverged { imf: imfs.len() });
        }
        for (r, v) in residue.iter_mut().zip(&h) {
            *r -= v;
        }
        let energy = h.iter().map(|v| v * v).sum::<f64>();
        imfs.push(h);
        if energy == 0.0 {
            break;
        }
    }
    Emd { imfs, residue }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstruction() {
        let x: Vec<f64> = (0..300)
            .map(|i| {
                let t = i as f64 / 500.0;
                (std::f64::consts::TAU * 20.0 * t).sin() + 0.4 * (std::f64::consts::TAU * 90.0 * t).cos() + t
            })
            .collect();
        let d = emd(&x, &EmdConfig::default(), &mut Diagnostics::new());
        assert!(!d.imfs.is_empty() && d.imfs.len() <= 8);
        let mut se = 0.0;
        for i in 0..x.len() {
            let s: f64 = d.imfs.iter().map(|m| m[i]).sum::<f64>() + d.residue[i];
            se += (s - x[i]).powi(2);
        }
        let rms = (se / x.len() as f64).sqrt();
        let xrms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
        assert!(rms / xrms <= 1e-6);
    }

    #[test]
    fn zero_signal_has_no_modes() {
        let d = emd(&[0.0; 50], &EmdConfig::default(), &mut Diagnostics::new());
        assert!(d.imfs.is_empty());
    }

    #[test]
    fn monotone_is_residue() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let d = emd(&x, &EmdConfig::default(), &mut Diagnostics::new());
        assert!(d.imfs.is_empty());
        assert_eq!(d.residue, x);
    }
}
