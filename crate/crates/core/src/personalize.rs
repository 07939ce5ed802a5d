//! Gait similarity between a target walker and each training walker, and
//! similarity-weighted fine-tuning of the general model.
//!
//! Similarity is measured in the model's concatenation-layer embedding:
//! `D_i` is the mean Euclidean distance over all pairs of target and
//! person-`i` footsteps, and `gsi_i = (1 / (D_i + eps)) / max_j (1 / (D_j + eps))`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureBundle;
use crate::model::{train, Model, TrainConfig, TrainReport, TrainingSample};
use crate::parallel;

pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub person_id: String,
    pub embeddings: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitSimilarity {
    pub person_id: String,
    pub distance: f64,
    pub gsi: f64,
}

/// Concatenation-layer activations (dropout off) of each bundle.
pub fn embed(model: &Model, bundles: &[&FeatureBundle], threads: usize) -> Result<Vec<Vec<f64>>> {
    parallel::map(bundles, threads, |b| model.predict(b).map(|(_, e)| e))
        .into_iter()
        .collect()
}

/// One embedding set per person, ordered by person id.
pub fn embed_dataset(model: &Model, samples: &[TrainingSample], threads: usize) -> Result<Vec<EmbeddingSet>> {
    let bundles: Vec<&FeatureBundle> = samples.iter().map(|s| &s.bundle).collect();
    let emb = embed(model, &bundles, threads)?;
    let mut by_person: BTreeMap<&str, Vec<Vec<f64>>> = BTreeMap::new();
    for (s, e) in samples.iter().zip(emb) {
        by_person.entry(&s.person_id).or_default().push(e);
    }
    Ok(by_person
        .into_iter()
        .map(|(p, embeddings)| EmbeddingSet {
            person_id: p.to_string(),
            embeddings,
        })
        .collect())
}

pub fn pairwise_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Mean distance over all `K1 x K2` pairs.
pub fn person_distance(target: &[Vec<f64>], other: &[Vec<f64>]) -> Result<f64> {
    if target.is_empty() || other.is_empty() {
        return Err(Error::Empty("embedding set".into()));
    }
    let mut sum = 0.0;
    for t in target {
        for o in other {
            sum += pairwise_distance(t, o)?;
        }
    }
    Ok(sum / (target.len() * other.len()) as f64)
}

/// Normalized inverse distances; input order is preserved.
pub fn gsi_all(distances: &[(String, f64)], epsilon: f64) -> Result<Vec<GaitSimilarity>> {
    if distances.is_empty() {
        return Err(Error::Empty("training persons".into()));
    }
    if let Some((p, d)) = distances.iter().find(|(_, d)| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::InvalidArgument(format!("distance {d} of person `{p}`")));
    }
    let raw: Vec<f64> = distances.iter().map(|(_, d)| 1.0 / (d + epsilon)).collect();
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(distances
        .iter()
        .zip(raw)
        .map(|((p, d), r)| GaitSimilarity {
            person_id: p.clone(),
            distance: *d,
            gsi: if r == max { 1.0 } else { r / max },
        })
        .collect())
}

/// GSI of every training person against the target's footsteps.
pub fn compute_gsi(
    model: &Model,
    target: &[&FeatureBundle],
    train_samples: &[TrainingSample],
    epsilon: f64,
    threads: usize,
) -> Result<Vec<GaitSimilarity>> {
    let t = embed(model, target, threads)?;
    let sets = embed_dataset(model, train_samples, threads)?;
    let d: Vec<Result<(String, f64)>> = parallel::map(&sets, threads, |s| {
        person_distance(&t, &s.embeddings).map(|d| (s.person_id.clone(), d))
    });
    gsi_all(&d.into_iter().collect::<Result<Vec<_>>>()?, epsilon)
}

/// Set sample weights from `gsi`; samples of `target_person` get 1.
pub fn weight_samples(
    samples: &[TrainingSample],
    gsi: &[GaitSimilarity],
    target_person: Option<&str>,
) -> Result<Vec<TrainingSample>> {
    let map: BTreeMap<&str, f64> = gsi.iter().map(|g| (g.person_id.as_str(), g.gsi)).collect();
    samples
        .iter()
        .map(|s| {
            let w = if Some(s.person_id.as_str()) == target_person {
                1.0
            } else {
                *map.get(s.person_id.as_str())
                    .ok_or_else(|| Error::UnknownPerson(s.person_id.clone()))?
            };
            Ok(TrainingSample { weight: w, ..s.clone() })
        })
        .collect()
}

/// Fine-tune a copy of `general` on GSI-weighted samples. Prune masks stay
/// fixed because the optimizer never updates masked parameters.
pub fn fine_tune(
    general: &Model,
    train_samples: &[TrainingSample],
    valid_samples: &[TrainingSample],
    gsi: &[GaitSimilarity],
    target_person: Option<&str>,
    cfg: &TrainConfig,
) -> Result<(Model, TrainReport)> {
    let tr = weight_samples(train_samples, gsi, target_person)?;
    let va = weight_samples(valid_samples, gsi, target_person)?;
    let mut model = general.clone();
    let report = train(&mut model, &tr, &va, cfg, None)?;
    model.personalized = true;
    Ok((model, report))
}

/// `person_id,D_i,gsi`
pub fn gsi_csv(gsi: &[GaitSimilarity]) -> String {
    let mut s = String::from("person_id,D_i,gsi\n");
    for g in gsi {
        s.push_str(&format!("{},{},{}\n", g.person_id, g.distance, g.gsi));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        assert_eq!(pairwise_distance(&[1.0, 2.0, 2.0], &[0.0; 3]).unwrap(), 3.0);
        assert!(pairwise_distance(&[1.0], &[1.0, 2.0]).is_err());
        // pair distances 1, 2, 3, 4
        let t = vec![vec![0.0], vec![-2.0]];
        let o = vec![vec![1.0], vec![2.0]];
        assert_eq!(person_distance(&t, &o).unwrap(), 2.5);
        let t = vec![vec![0.0, 0.0]];
        assert_eq!(person_distance(&t, &t).unwrap(), 0.0);
        assert!(person_distance(&[], &t).is_err());
    }

    #[test]
    fn gsi_examples() {
        let d = vec![("a".to_string(), 2.0), ("b".to_string(), 4.0), ("c".to_string(), 8.0)];
        let g = gsi_all(&d, 0.0).unwrap();
        assert_eq!(g.iter().map(|x| x.gsi).collect::<Vec<_>>(), vec![1.0, 0.5, 0.25]);
        let single = gsi_all(&[("x".to_string(), 123.0)], DEFAULT_EPSILON).unwrap();
        assert_eq!(single[0].gsi, 1.0);
        let zero = gsi_all(&[("x".to_string(), 0.0), ("y".to_string(), 1.0)], DEFAULT_EPSILON).unwrap();
        assert_eq!(zero[0].gsi, 1.0);
        assert!(zero[1].gsi > 0.0 && zero[1].gsi < 1e-8);
    }
}
