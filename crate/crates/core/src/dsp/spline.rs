//! Natural cubic spline interpolation.

/// Natural cubic spline through strictly increasing knots `xs`, evaluated at
/// integer positions `0..n`.
pub fn natural_cubic_on_grid(xs: &[f64], ys: &[f64], n: usize) -> Vec<f64> {
    let m = xs.len();
    debug_assert_eq!(m, ys.len());
    if m == 0 {
        return vec![0.0; n];
    }
    if m == 1 {
        return vec![ys[0]; n];
    }
    if m == 2 {
        let slope = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        return (0..n).map(|i| ys[0] + slope * (i as f64 - xs[0])).collect();
    }
    // Second derivatives via the tridiagonal system (Thomas algorithm).
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sub = vec![0.0; m];
    let mut diag = vec![1.0; m];
    let mut sup = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for i in 1..m - 1 {
        sub[i] = h[i - 1];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        sup[i] = h[i];
        rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
    }
    for i in 1..m {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut m2 = vec![0.0; m];
    m2[m - 1] = rhs[m - 1] / diag[m - 1];
    for i in (0..m - 1).rev() {
        m2[i] = (rhs[i] - sup[i] * m2[i + 1]) / diag[i];
    }

    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for i in 0..n {
        let x = i as f64;
        while seg + 2 < m && x > xs[seg + 1] {
            seg += 1;
        }
        let (x0, x1) = (xs[seg], xs[seg + 1]);
        let hh = x1 - x0;
        let a = (x1 - x) / hh;
        let b = (x - x0) / hh;
        let v = a * ys[seg]
            + b * ys[seg + 1]
            + ((a * a * a - a) * m2[seg] + (b * b * b - b) * m2[seg + 1]) * hh * hh / 6.0;
        out.push(v);
    }
    out
}
