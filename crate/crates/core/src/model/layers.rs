//! Forward and backward passes of the individual layer types over flat
//! parameter slices.

/// `y = W x + b`, `W` row-major `[out x in]`.
pub fn dense_forward(w: &[f64], b: &[f64], x: &[f64], y: &mut [f64]) {
    let n_in = x.len();
    for (o, yo) in y.iter_mut().enumerate() {
        let row = &w[o * n_in..(o + 1) * n_in];
        *yo = b[o] + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
    }
}

/// Accumulates `dW`, `db` and, when given, `dx`.
pub fn dense_backward(
    w: &[f64],
    x: &[f64],
    dy: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    dx: Option<&mut [f64]>,
) {
    let n_in = x.len();
    for (o, &g) in dy.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        db[o] += g;
        for (d, xi) in dw[o * n_in..(o + 1) * n_in].iter_mut().zip(x) {
            *d += g * xi;
        }
    }
    if let Some(dx) = dx {
        for (o, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            for (d, wi) in dx.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                *d += g * wi;
            }
        }
    }
}

pub fn relu_in_place(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Zero the gradient where the ReLU output was zero.
pub fn relu_backward(out: &[f64], d: &mut [f64]) {
    for (g, o) in d.iter_mut().zip(out) {
        if *o <= 0.0 {
            *g = 0.0;
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Per-step quantities kept for backpropagation through time.
#[derive(Debug, Clone, Default)]
pub struct LstmCache {
    /// `[x_t; h_{t-1}]` for each step.
    pub xh: Vec<Vec<f64>>,
    /// Gate activations `i, f, g, o` (each `h` long) per step.
    pub gates: Vec<Vec<f64>>,
    /// Cell state per step, with the zero initial state at index 0.
    pub c: Vec<Vec<f64>>,
    pub h_last: Vec<f64>,
}

/// Single-layer LSTM over `xs` (time-major), zero initial state. `W` is
/// `[4h x (in + h)]` with gate blocks ordered input, forget, cell, output.
pub fn lstm_forward(w: &[f64], b: &[f64], xs: &[Vec<f64>], hidden: usize) -> LstmCache {
    lstm_forward_from(w, b, xs, hidden, &vec![0.0; hidden])
}

/// As [`lstm_forward`] but starting from cell state `c0`.
pub fn lstm_forward_from(w: &[f64], b: &[f64], xs: &[Vec<f64>], hidden: usize, c0: &[f64]) -> LstmCache {
    let mut cache = LstmCache {
        c: vec![c0.to_vec()],
        ..Default::default()
    };
    let mut h = vec![0.0; hidden];
    let mut z = vec![0.0; 4 * hidden];
    for x in xs {
        let mut xh = x.clone();
        xh.extend_from_slice(&h);
        dense_forward(w, b, &xh, &mut z);
        let mut gates = vec![0.0; 4 * hidden];
        for k in 0..hidden {
            gates[k] = sigmoid(z[k]);
            gates[hidden + k] = sigmoid(z[hidden + k]);
            gates[2 * hidden + k] = z[2 * hidden + k].tanh();
            gates[3 * hidden + k] = sigmoid(z[3 * hidden + k]);
        }
        let c_prev = cache.c.last().expect("initial state").clone();
        let c: Vec<f64> = (0..hidden)
            .map(|k| gates[hidden + k] * c_prev[k] + gates[k] * gates[2 * hidden + k])
            .collect();
        h = (0..hidden).map(|k| gates[3 * hidden + k] * c[k].tanh()).collect();
        cache.xh.push(xh);
        cache.gates.push(gates);
        cache.c.push(c);
    }
    cache.h_last = h;
    cache
}

/// Backpropagate a gradient on the final hidden state.
pub fn lstm_backward(
    w: &[f64],
    cache: &LstmCache,
    hidden: usize,
    dh_last: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
) {
    let steps = cache.xh.len();
    let mut dh = dh_last.to_vec();
    let mut dc = vec![0.0; hidden];
    let mut dz = vec![0.0; 4 * hidden];
    for t in (0..steps).rev() {
        let g = &cache.gates[t];
        let c = &cache.c[t + 1];
        let c_prev = &cache.c[t];
        for k in 0..hidden {
            let (ig, fg, gg, og) = (g[k], g[hidden + k], g[2 * hidden + k], g[3 * hidden + k]);
            let tc = c[k].tanh();
            let d_o = dh[k] * tc;
            dc[k] += dh[k] * og * (1.0 - tc * tc);
            let d_i = dc[k] * gg;
            let d_g = dc[k] * ig;
            let d_f = dc[k] * c_prev[k];
            dz[k] = d_i * ig * (1.0 - ig);
            dz[hidden + k] = d_f * fg * (1.0 - fg);
            dz[2 * hidden + k] = d_g * (1.0 - gg * gg);
            dz[3 * hidden + k] = d_o * og * (1.0 - og);
            dc[k] *= fg;
        }
        let xh = &cache.xh[t];
        let mut dxh = vec![0.0; xh.len()];
        dense_backward(w, xh, &dz, dw, db, Some(&mut dxh));
        let n_in = xh.len() - hidden;
        dh.copy_from_slice(&dxh[n_in..]);
    }
}

/// 3x3 convolution with zero "same" padding over `[c x h x w]` maps.
/// `W` is `[out x in x 3 x 3]`.
pub fn conv3_forward(
    w: &[f64],
    b: &[f64],
    x: &[f64],
    c_in: usize,
    h: usize,
    wd: usize,
    c_out: usize,
) -> Vec<f64> {
    let mut y = vec![0.0; c_out * h * wd];
    for co in 0..c_out {
        let plane = &mut y[co * h * wd..(co + 1) * h * wd];
        plane.fill(b[co]);
        for ci in 0..c_in {
            let src = &x[ci * h * wd..(ci + 1) * h * wd];
            let k = &w[(co * c_in + ci) * 9..(co * c_in + ci + 1) * 9];
            for ky in 0..3 {
                for kx in 0..3 {
                    let kv = k[ky * 3 + kx];
                    if kv == 0.0 {
                        continue;
                    }
                    // output (r, c) reads input (r + ky - 1, c + kx - 1)
                    let r0 = 1usize.saturating_sub(ky);
                    let r1 = (h + 1 - ky).min(h);
                    let c0 = 1usize.saturating_sub(kx);
                    let c1 = (wd + 1 - kx).min(wd);
                    for r in r0..r1 {
                        let sr = r + ky - 1;
                        let out_row = &mut plane[r * wd..(r + 1) * wd];
                        let in_row = &src[sr * wd..(sr + 1) * wd];
                        for c in c0..c1 {
                            out_row[c] += kv * in_row[c + kx - 1];
                        }
                    }
                }
            }
        }
    }
    y
}

#[allow(clippy::too_many_arguments)]
pub fn conv3_backward(
    w: &[f64],
    x: &[f64],
    dy: &[f64],
    c_in: usize,
    h: usize,
    wd: usize,
    c_out: usize,
    dw: &mut [f64],
    db: &mut [f64],
    mut dx: Option<&mut [f64]>,
) {
    for co in 0..c_out {
        let g = &dy[co * h * wd..(co + 1) * h * wd];
        db[co] += g.iter().sum::<f64>();
        for ci in 0..c_in {
            let src = &x[ci * h * wd..(ci + 1) * h * wd];
            let base = (co * c_in + ci) * 9;
            for ky in 0..3 {
                for kx in 0..3 {
                    let r0 = 1usize.saturating_sub(ky);
                    let r1 = (h + 1 - ky).min(h);
                    let c0 = 1usize.saturating_sub(kx);
                    let c1 = (wd + 1 - kx).min(wd);
                    let mut acc = 0.0;
                    for r in r0..r1 {
                        let sr = r + ky - 1;
                        for c in c0..c1 {
                            acc += g[r * wd + c] * src[sr * wd + c + kx - 1];
                        }
                    }
                    dw[base + ky * 3 + kx] += acc;
                    if let Some(dx) = dx.as_deref_mut() {
                        let kv = w[base + ky * 3 + kx];
                        if kv == 0.0 {
                            continue;
                        }
                        let dplane = &mut dx[ci * h * wd..(ci + 1) * h * wd];
                        for r in r0..r1 {
                            let sr = r + ky - 1;
                            for c in c0..c1 {
                                dplane[sr * wd + c + kx - 1] += kv * g[r * wd + c];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// 2x2 average pooling; odd trailing rows/columns are dropped.
pub fn avgpool2_forward(x: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let (ho, wo) = (h / 2, w / 2);
    let mut y = vec![0.0; c * ho * wo];
    for ch in 0..c {
        for r in 0..ho {
            for col in 0..wo {
                let at = |rr: usize, cc: usize| x[ch * h * w + rr * w + cc];
                y[ch * ho * wo + r * wo + col] = 0.25
                    * (at(2 * r, 2 * col) + at(2 * r, 2 * col + 1) + at(2 * r + 1, 2 * col) + at(2 * r + 1, 2 * col + 1));
            }
        }
    }
    y
}

pub fn avgpool2_backward(dy: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let (ho, wo) = (h / 2, w / 2);
    let mut dx = vec![0.0; c * h * w];
    for ch in 0..c {
        for r in 0..ho {
            for col in 0..wo {
                let g = 0.25 * dy[ch * ho * wo + r * wo + col];
                for (rr, cc) in [(2 * r, 2 * col), (2 * r, 2 * col + 1), (2 * r + 1, 2 * col), (2 * r + 1, 2 * col + 1)] {
                    dx[ch * h * w + rr * w + cc] += g;
                }
            }
        }
    }
    dx
}
