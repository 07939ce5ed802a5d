//! Trajectory-median scoring, MAE and Pearson correlation.

use serde::{Deserialize, Serialize};

use crate::diag::{Diagnostics, Warning};
use crate::dsp::stats::{mean, median, pearson};
use crate::error::{Error, Result};

/// Width of the 1..9 score scale.
pub const SCORE_SPAN: f64 = 8.0;

/// Element-wise median of the footstep predictions of one trajectory.
pub fn trajectory_score(predictions: &[[f64; 2]]) -> Result<[f64; 2]> {
    if predictions.is_empty() {
        return Err(Error::Empty("trajectory predictions".into()));
    }
    let v: Vec<f64> = predictions.iter().map(|p| p[0]).collect();
    let a: Vec<f64> = predictions.iter().map(|p| p[1]).collect();
    Ok([median(&v), median(&a)])
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DimensionMetrics {
    pub mae: f64,
    /// `None` when either side has zero variance.
    pub pearson: Option<f64>,
}

impl DimensionMetrics {
    pub fn error_rate(&self) -> f64 {
        error_rate(self.mae)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub valence: DimensionMetrics,
    pub arousal: DimensionMetrics,
}

/// MAE as a fraction of the score span.
pub fn error_rate(mae: f64) -> f64 {
    mae / SCORE_SPAN
}

fn dimension(p: &[f64], t: &[f64], diag: &mut Diagnostics) -> DimensionMetrics {
    let mae = mean(&p.iter().zip(t).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>());
    let r = pearson(p, t);
    if r.is_none() {
        diag.warn(Warning::UndefinedCorrelation);
    }
    DimensionMetrics { mae, pearson: r }
}

pub fn metrics(predictions: &[[f64; 2]], truth: &[[f64; 2]], diag: &mut Diagnostics) -> Result<Metrics> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            found: predictions.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Empty("predictions".into()));
    }
    let col = |x: &[[f64; 2]], k: usize| x.iter().map(|p| p[k]).collect::<Vec<f64>>();
    Ok(Metrics {
        valence: dimension(&col(predictions, 0), &col(truth, 0), diag),
        arousal: dimension(&col(predictions, 1), &col(truth, 1), diag),
    })
}
