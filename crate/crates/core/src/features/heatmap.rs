//! Per-quadrant deviation of each scalar feature from its overall mean.

use serde::{Deserialize, Serialize};

use crate::diag::{Diagnostics, Warning};
use crate::dsp::stats::{mean, std_dev};
use crate::error::{Error, Result};
use crate::signal::{EmotionLabel, EmotionQuadrant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub features: Vec<String>,
    /// Column order.
    pub quadrants: Vec<EmotionQuadrant>,
    /// `cells[f][q]` in `[-1, 1]`.
    pub cells: Vec<Vec<f64>>,
    /// Quadrants that had at least one sample.
    pub present: Vec<bool>,
}

/// Rows are scalar feature vectors with their labels.
///
/// Each cell is `mean_q(f) - mean_all(f)` divided by the larger of the
/// row's largest absolute deviation and the feature's overall standard
/// deviation. A feature whose quadrant means differ by far less than its
/// spread therefore stays near zero instead of being stretched to +-1.
pub fn feature_deviation_heatmap(
    names: &[String],
    rows: &[(Vec<f64>, EmotionLabel)],
    diag: &mut Diagnostics,
) -> Result<Heatmap> {
    if rows.is_empty() {
        return Err(Error::Empty("heatmap dataset".into()));
    }
    for (v, _) in rows {
        if v.len() != names.len() {
            return Err(Error::LengthMismatch {
                expected: names.len(),
                found: v.len(),
            });
        }
    }
    let quadrants = EmotionQuadrant::ALL.to_vec();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); 4];
    for (i, (_, label)) in rows.iter().enumerate() {
        groups[label.quadrant().index()].push(i);
    }
    let present: Vec<bool> = groups.iter().map(|g| !g.is_empty()).collect();
    for q in &quadrants {
        if !present[q.index()] {
            diag.warn(Warning::EmptyQuadrant(q.name()));
        }
    }

    let mut cells = Vec::with_capacity(names.len());
    for f in 0..names.len() {
        let column: Vec<f64> = rows.iter().map(|(v, _)| v[f]).collect();
        let overall = mean(&column);
        let dev: Vec<f64> = groups
            .iter()
            .map(|g| {
                if g.is_empty() {
                    0.0
                } else {
                    g.iter().map(|&i| column[i]).sum::<f64>() / g.len() as f64 - overall
                }
            })
            .collect();
        let max_dev = dev.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let scale = max_dev.max(std_dev(&column));
        let row = if scale > 0.0 && max_dev > 1e-12 * overall.abs().max(1e-300) {
            dev.iter().map(|d| (d / scale).clamp(-1.0, 1.0)).collect()
        } else {
            vec![0.0; 4]
        };
        cells.push(row);
    }
    Ok(Heatmap {
        features: names.to_vec(),
        quadrants,
        cells,
        present,
    })
}

impl Heatmap {
    pub fn cell(&self, feature: &str, quadrant: EmotionQuadrant) -> Option<f64> {
        let f = self.features.iter().position(|n| n == feature)?;
        Some(self.cells[f][quadrant.index()])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("feature");
        for q in &self.quadrants {
            s.push(',');
            s.push_str(q.name());
        }
        s.push('\n');
        for (name, row) in self.features.iter().zip(&self.cells) {
            s.push_str(name);
            for v in row {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }

    /// Diverging blue-white-red rendering.
    pub fn to_svg(&self) -> String {
        let (cw, ch, left, top) = (60.0, 14.0, 170.0, 24.0);
        let width = left + cw * self.quadrants.len() as f64 + 10.0;
        let height = top + ch * self.features.len() as f64 + 10.0;
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"10\">\n"
        );
        for (j, q) in self.quadrants.iter().enumerate() {
            s.push_str(&format!(
                "<text x=\"{}\" y=\"16\" text-anchor=\"middle\">{}</text>\n",
                left + cw * (j as f64 + 0.5),
                q.name()
            ));
        }
        for (i, (name, row)) in self.features.iter().zip(&self.cells).enumerate() {
            let y = top + ch * i as f64;
            s.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
                left - 4.0,
                y + ch - 3.0,
                name
            ));
            for (j, v) in row.iter().enumerate() {
                let (r, g, b) = diverging(*v);
                s.push_str(&format!(
                    "<rect x=\"{}\" y=\"{y}\" width=\"{cw}\" height=\"{ch}\" fill=\"rgb({r},{g},{b})\"><title>{name} {}: {v:.3}</title></rect>\n",
                    left + cw * j as f64,
                    self.quadrants[j].name()
                ));
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

fn diverging(v: f64) -> (u8, u8, u8) {
    let t = v.clamp(-1.0, 1.0);
    let fade = |a: f64| (255.0 * (1.0 - a)).round() as u8;
    if t >= 0.0 {
        (255, fade(t), fade(t))
    } else {
        (fade(-t), fade(-t), 255)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(q: EmotionQuadrant) -> EmotionLabel {
        let v = if q.high_valence() { 7.0 } else { 3.0 };
        let a = if q.high_arousal() { 7.0 } else { 3.0 };
        EmotionLabel::new(v, a).unwrap()
    }

    fn rows(f: impl Fn(EmotionQuadrant) -> f64) -> Vec<(Vec<f64>, EmotionLabel)> {
        let mut out = Vec::new();
        for q in EmotionQuadrant::ALL {
            for _ in 0..5 {
                out.push((vec![f(q), 3.0], label(q)));
            }
        }
        out
    }

    #[test]
    fn constant_feature_zero_row() {
        let names = vec!["x".to_string(), "c".to_string()];
        let h = feature_deviation_heatmap(&names, &rows(|_| 1.0), &mut Diagnostics::new()).unwrap();
        assert_eq!(h.cells[1], vec![0.0; 4]);
        assert_eq!(h.cells[0], vec![0.0; 4]);
    }

    #[test]
    fn single_quadrant_offset() {
        let names = vec!["x".to_string(), "c".to_string()];
        let data = rows(|q| if q == EmotionQuadrant::Hvha { 2.0 } else { 0.0 });
        let h = feature_deviation_heatmap(&names, &data, &mut Diagnostics::new()).unwrap();
        assert!((h.cell("x", EmotionQuadrant::Hvha).unwrap() - 1.0).abs() < 1e-12);
        for q in [EmotionQuadrant::Hvla, EmotionQuadrant::Lvha, EmotionQuadrant::Lvla] {
            assert!(h.cell("x", q).unwrap() < 0.0);
        }
    }

    #[test]
    fn empty_quadrant_warns() {
        let names = vec!["x".to_string(), "c".to_string()];
        let data: Vec<_> = rows(|q| q.index() as f64)
            .into_iter()
            .filter(|(_, l)| l.quadrant() != EmotionQuadrant::Lvla)
            .collect();
        let mut d = Diagnostics::new();
        let h = feature_deviation_heatmap(&names, &data, &mut d).unwrap();
        assert!(d.contains(&Warning::EmptyQuadrant("LVLA")));
        assert_eq!(h.cell("x", EmotionQuadrant::Lvla), Some(0.0));
        assert!(h.to_svg().starts_with("<svg"));
    }
}
