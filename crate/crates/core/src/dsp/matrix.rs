use serde::{Deserialize, Serialize};

/// Dense row-major 2-D array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Area-average resample to `rows x cols` (fractional cell overlap).
    pub fn resample(&self, rows: usize, cols: usize) -> Matrix {
        let mut out = Matrix::zeros(rows, cols);
        if self.rows == 0 || self.cols == 0 {
            return out;
        }
        let rw = weights(self.rows, rows);
        let cw = weights(self.cols, cols);
        for (orow, rlist) in rw.iter().enumerate() {
            for (ocol, clist) in cw.iter().enumerate() {
                let mut acc = 0.0;
                let mut wsum = 0.0;
                for &(ir, wr) in rlist {
                    for &(ic, wc) in clist {
                        acc += self.get(ir, ic) * wr * wc;
                        wsum += wr * wc;
                    }
                }
                out.set(orow, ocol, if wsum > 0.0 { acc / wsum } else { 0.0 });
            }
        }
        out
    }
}

/// Overlap weights mapping `n_in` cells onto `n_out` cells.
fn weights(n_in: usize, n_out: usize) -> Vec<Vec<(usize, f64)>> {
    let ratio = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|o| {
            let lo = o as f64 * ratio;
            let hi = lo + ratio;
            if ratio < 1.0 {
                // Upsampling: nearest input cell by centre.
                let c = ((lo + hi) * 0.5).floor().min(n_in as f64 - 1.0) as usize;
                return vec![(c, 1.0)];
            }
            let mut v = Vec::new();
            let mut i = lo.floor() as usize;
            while (i as f64) < hi && i < n_in {
                let a = (i as f64).max(lo);
                let b = ((i + 1) as f64).min(hi);
                if b > a {
                    v.push((i, b - a));
                }
                i += 1;
            }
            v
        })
        .collect()
}
