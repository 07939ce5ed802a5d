//! Four-way quadrant classification with an optional class-weighted
//! cross-entropy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::table::FeatureTable;
use crate::features::FeatureSet;
use crate::model::train::initialize_from_data;
use crate::model::{train, HeadKind, Model, NetworkConfig, TrainConfig};
use crate::signal::EmotionQuadrant;

use super::experiment::samples;
use super::split::split_random;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub feature_set: FeatureSet,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            network: NetworkConfig {
                head: HeadKind::Classification,
                ..NetworkConfig::default()
            },
            train: TrainConfig::default(),
            feature_set: FeatureSet::Both,
            valid_fraction: 0.1,
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
    /// `confusion[truth][predicted]`, quadrants in [`EmotionQuadrant::ALL`] order.
    pub confusion: Vec<Vec<usize>>,
    pub class_weights: Vec<f64>,
    pub fingerprint: Option<String>,
}

impl ClassificationReport {
    pub fn confusion_csv(&self) -> String {
        let names: Vec<&str> = EmotionQuadrant::ALL.iter().map(|q| q.name()).collect();
        let mut s = format!("truth,{}\n", names.join(","));
        for (q, row) in names.iter().zip(&self.confusion) {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            s.push_str(&format!("{q},{}\n", cells.join(",")));
        }
        s
    }
}

/// `N / N_c` per class.
pub fn inverse_frequency_weights(counts: &[usize]) -> Result<Vec<f64>> {
    let missing: Vec<EmotionQuadrant> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == 0)
        .filter_map(|(i, _)| EmotionQuadrant::from_index(i))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingClasses(missing));
    }
    let n: usize = counts.iter().sum();
    Ok(counts.iter().map(|&c| n as f64 / c as f64).collect())
}

/// Accuracy, per-class F1, macro F1 and confusion matrix over four classes.
pub fn classification_metrics(truth: &[usize], predicted: &[usize]) -> (f64, Vec<f64>, f64, Vec<Vec<usize>>) {
    let mut confusion = vec![vec![0usize; 4]; 4];
    for (&t, &p) in truth.iter().zip(predicted) {
        confusion[t][p] += 1;
    }
    let correct: usize = (0..4).map(|k| confusion[k][k]).sum();
    let accuracy = if truth.is_empty() { 0.0 } else { correct as f64 / truth.len() as f64 };
    let f1: Vec<f64> = (0..4)
        .map(|k| {
            let tp = confusion[k][k] as f64;
            let fp = (0..4).filter(|&t| t != k).map(|t| confusion[t][k]).sum::<usize>() as f64;
            let fn_ = (0..4).filter(|&p| p != k).map(|p| confusion[k][p]).sum::<usize>() as f64;
            if tp == 0.0 {
                0.0
            } else {
                2.0 * tp / (2.0 * tp + fp + fn_)
            }
        })
        .collect();
    let macro_f1 = f1.iter().sum::<f64>() / 4.0;
    (accuracy, f1, macro_f1, confusion)
}

/// Train a softmax head on a trajectory-atomic split and score footsteps of
/// the test part. Supplied class weights are rescaled so the mean weight
/// over training samples is one.
pub fn classify_quadrants(
    table: &FeatureTable,
    cfg: &ClassifyConfig,
    class_weights: Option<Vec<f64>>,
) -> Result<ClassificationReport> {
    let split = split_random(&table.rows, cfg.valid_fraction, cfg.test_fraction, cfg.seed);
    let tr = samples(&table.rows, &split.train);
    let va = samples(&table.rows, &split.valid);
    let mut counts = vec![0usize; 4];
    for s in &tr {
        counts[s.label.quadrant().index()] += 1;
    }
    let missing: Vec<EmotionQuadrant> = (0..4)
        .filter(|&k| counts[k] == 0)
        .filter_map(EmotionQuadrant::from_index)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingClasses(missing));
    }
    let weights = match class_weights {
        Some(w) => {
            if w.len() != 4 || w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidArgument("class weights must be 4 positive values".into()));
            }
            let mean = w.iter().zip(&counts).map(|(w, &c)| w * c as f64).sum::<f64>() / tr.len() as f64;
            w.iter().map(|v| v / mean).collect()
        }
        None => vec![1.0; 4],
    };
    let network = NetworkConfig {
        head: HeadKind::Classification,
        ..cfg.network.clone()
    };
    let mut model = Model::new(network, &table.layout, cfg.feature_set)?;
    initialize_from_data(&mut model, &tr)?;
    let tcfg = TrainConfig {
        class_weights: Some(weights.clone()),
        seed: cfg.seed,
        ..cfg.train.clone()
    };
    train(&mut model, &tr, &va, &tcfg, None)?;

    let mut truth = Vec::with_capacity(split.test.len());
    let mut predicted = Vec::with_capacity(split.test.len());
    for &i in &split.test {
        let r = &table.rows[i];
        let (out, _) = model.predict(&r.bundle)?;
        let k = crate::dsp::stats::argmax(&out).unwrap_or(0);
        truth.push(r.label.quadrant().index());
        predicted.push(k);
    }
    let (accuracy, per_class_f1, macro_f1, confusion) = classification_metrics(&truth, &predicted);
    Ok(ClassificationReport {
        accuracy,
        macro_f1,
        per_class_f1,
        confusion,
        class_weights: weights,
        fingerprint: table.fingerprint.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_frequency_example() {
        let w = inverse_frequency_weights(&[10, 10, 10, 70]).unwrap();
        assert_eq!(&w[..3], &[10.0, 10.0, 10.0]);
        assert!((w[3] - 10.0 / 7.0).abs() < 1e-12);
        assert!(matches!(inverse_frequency_weights(&[1, 0, 2, 3]), Err(Error::MissingClasses(_))));
    }

    #[test]
    fn metrics_of_chance_and_perfect() {
        let truth: Vec<usize> = (0..400).map(|i| i % 4).collect();
        let (acc, _, f1, _) = classification_metrics(&truth, &truth);
        assert_eq!(acc, 1.0);
        assert_eq!(f1, 1.0);
        let constant = vec![2usize; 400];
        let (acc, _, _, conf) = classification_metrics(&truth, &constant);
        assert!((acc - 0.25).abs() < 1e-12);
        assert_eq!(conf[0][2], 100);
    }
}
