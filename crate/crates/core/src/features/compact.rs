//! Linear prediction and Legendre polynomial coefficients.

use crate::diag::{Diagnostics, Warning};
use crate::dsp::lstsq::{legendre_row, solve};

/// Predictor coefficients `a` with `x[n] ~ sum_k a[k] x[n-1-k]`, from the
/// biased autocorrelation by Levinson-Durbin recursion.
pub fn lpc(x: &[f64], order: usize, diag: &mut Diagnostics) -> Vec<f64> {
    let n = x.len();
    let r: Vec<f64> = (0..=order)
        .map(|lag| {
            if lag >= n {
                0.0
            } else {
                x[..n - lag].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64
            }
        })
        .collect();
    let mut a = vec![0.0; order];
    if order == 0 {
        return a;
    }
    if r[0] <= 0.0 {
        diag.warn(Warning::SingularAutocorrelation);
        return a;
    }
    let mut err = r[0];
    for m in 0..order {
        let acc = r[m + 1] - (0..m).map(|k| a[k] * r[m - k]).sum::<f64>();
        let kappa = acc / err;
        let prev = a.clone();
        a[m] = kappa;
        for k in 0..m {
            a[k] = prev[k] - kappa * prev[m - 1 - k];
        }
        err *= 1.0 - kappa * kappa;
        if err <= r[0] * 1e-14 {
            break;
        }
    }
    a
}

/// Least-squares coefficients of `P_0..=P_order` with samples mapped to
/// `[-1, 1]`.
pub fn legendre_coefficients(x: &[f64], order: usize) -> Vec<f64> {
    let n = x.len();
    let cols = order + 1;
    if n == 0 {
        return vec![0.0; cols];
    }
    let mut design = Vec::with_capacity(n * cols);
    for i in 0..n {
        let t = if n == 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (n - 1) as f64 };
        design.extend(legendre_row(t, order));
    }
    solve(&design, cols, x).unwrap_or_else(|| vec![0.0; cols])
}
