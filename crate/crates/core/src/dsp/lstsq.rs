//! Least-squares fits backed by nalgebra's SVD.

use nalgebra::{DMatrix, DVector};

/// Solve `min ||A c - b||` for a row-major design matrix with `cols` columns.
pub fn solve(design: &[f64], cols: usize, rhs: &[f64]) -> Option<Vec<f64>> {
    let rows = rhs.len();
    if rows == 0 || cols == 0 || design.len() != rows * cols {
        return None;
    }
    let a = DMatrix::from_row_slice(rows, cols, design);
    let b = DVector::from_column_slice(rhs);
    let svd = a.svd(true, true);
    let c = svd.solve(&b, 1e-12).ok()?;
    let out: Vec<f64> = c.iter().copied().collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Polynomial coefficients (ascending powers of `(x - center) / scale`).
#[derive(Debug, Clone)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
    pub center: f64,
    pub scale: f64,
}

impl Polynomial {
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.scale;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }
}

/// Least-squares polynomial of degree `order` through `(xs, ys)`.
pub fn polyfit(xs: &[f64], ys: &[f64], order: usize) -> Option<Polynomial> {
    if xs.len() != ys.len() || xs.len() <= order {
        return None;
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let center = 0.5 * (lo + hi);
    let scale = (0.5 * (hi - lo)).max(f64::MIN_POSITIVE);
    let cols = order + 1;
    let mut design = Vec::with_capacity(xs.len() * cols);
    for &x in xs {
        let u = (x - center) / scale;
        let mut p = 1.0;
        for _ in 0..cols {
            design.push(p);
            p *= u;
        }
    }
    let coeffs = solve(&design, cols, ys)?;
    Some(Polynomial {
        coeffs,
        center,
        scale,
    })
}

/// Legendre polynomials `P_0..=P_order` evaluated at `t`.
pub fn legendre_row(t: f64, order: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(order + 1);
    p.push(1.0);
    if order >= 1 {
        p.push(t);
    }
    for n in 1..order {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * t * p[n] - nf * p[n - 1]) / (nf + 1.0);
        p.push(next);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyfit_recovers_cubic() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.3 + 100.0).collect();
        let f = |x: f64| 2.0 - 0.5 * (x - 101.0) + 0.25 * (x - 101.0).powi(3);
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let p = polyfit(&xs, &ys, 3).unwrap();
        for x in [100.0, 102.5, 105.0] {
            assert!((p.eval(x) - f(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn legendre_values() {
        let r = legendre_row(0.5, 3);
        assert_eq!(r[0], 1.0);
        assert_eq!(r[1], 0.5);
        assert!((r[2] - (1.5 * 0.25 - 0.5)).abs() < 1e-15);
        assert!((r[3] - (2.5 * 0.125 - 1.5 * 0.5)).abs() < 1e-15);
    }
}
