//! Weighted-MAE training with Adam, optional pruning schedule and
//! best-validation checkpointing.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureBundle;
use crate::pruning::{self, Phase, PruningSchedule};
use crate::signal::{EmotionLabel, EmotionQuadrant};

use super::network::{Model, Prepared};
use super::HeadKind;

/// One footstep with its label and loss weight.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub bundle: FeatureBundle,
    pub label: EmotionLabel,
    pub weight: f64,
    pub person_id: String,
    pub trajectory_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    /// Worker threads for per-sample gradients; results do not depend on it.
    pub threads: usize,
    /// Restore the parameters of the best validation epoch at the end.
    pub best_validation: bool,
    /// Per-quadrant loss weights for the classification head.
    pub class_weights: Option<Vec<f64>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            threads: 1,
            best_validation: true,
            class_weights: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub phase: Phase,
    pub train_loss: f64,
    pub valid_loss: Option<f64>,
    /// Active prunable weights after the epoch.
    pub nonzero: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept, when checkpointing applied.
    pub best_epoch: Option<usize>,
}

impl TrainReport {
    /// `epoch,phase,train_loss,valid_loss,nonzero`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,phase,train_loss,valid_loss,nonzero\n");
        for r in &self.epochs {
            let v = r.valid_loss.map_or(String::new(), |v| v.to_string());
            s.push_str(&format!("{},{},{},{},{}\n", r.epoch, r.phase.name(), r.train_loss, v, r.nonzero));
        }
        s
    }
}

/// `sum_i w_i (|dv_i| + |da_i|) / (2 sum_i w_i)`.
pub fn loss(predictions: &[[f64; 2]], labels: &[EmotionLabel], weights: &[f64]) -> Result<f64> {
    if predictions.len() != labels.len() || labels.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: predictions.len(),
            found: labels.len().min(weights.len()),
        });
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateBatch);
    }
    let s: f64 = predictions
        .iter()
        .zip(labels)
        .zip(weights)
        .map(|((p, l), w)| w * ((p[0] - l.valence()).abs() + (p[1] - l.arousal()).abs()))
        .sum();
    Ok(s / (2.0 * total))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the dropout masks of one sample in one epoch.
pub fn dropout_seed(seed: u64, epoch: usize, sample: usize) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ epoch as u64) ^ sample as u64)
}

pub(crate) struct Target {
    input: Prepared,
    label: [f64; 2],
    class: usize,
    weight: f64,
}

fn prepare_all(model: &Model, data: &[TrainingSample]) -> Result<Vec<Target>> {
    data.iter()
        .map(|s| {
            if !(0.0..=1.0).contains(&s.weight) {
                return Err(Error::InvalidArgument(format!("sample weight {} outside [0, 1]", s.weight)));
            }
            Ok(Target {
                input: model.prepare(&s.bundle)?,
                label: s.label.as_array(),
                class: s.label.quadrant().index(),
                weight: s.weight,
            })
        })
        .collect()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Per-sample loss term and its gradient with respect to the output.
fn sample_objective(head: HeadKind, out: &[f64], t: &Target, class_weights: &[f64]) -> (f64, Vec<f64>) {
    match head {
        HeadKind::Regression => {
            let mut g = vec![0.0; 2];
            let mut l = 0.0;
            for k in 0..2 {
                let e = out[k] - t.label[k];
                l += e.abs();
                g[k] = if e > 0.0 { 1.0 } else if e < 0.0 { -1.0 } else { 0.0 };
            }
            (0.5 * l, g.iter().map(|v| 0.5 * v).collect())
        }
        HeadKind::Classification => {
            let p = softmax(out);
            let cw = class_weights.get(t.class).copied().unwrap_or(1.0);
            let l = -cw * p[t.class].max(1e-300).ln();
            let g = p
                .iter()
                .enumerate()
                .map(|(k, pk)| cw * (pk - if k == t.class { 1.0 } else { 0.0 }))
                .collect();
            (l, g)
        }
    }
}

fn evaluate_loss(model: &Model, data: &[Target], class_weights: &[f64]) -> Option<f64> {
    let total: f64 = data.iter().map(|t| t.weight).sum();
    if data.is_empty() {
        return None;
    }
    let uniform = total <= 0.0;
    let mut acc = 0.0;
    let mut norm = 0.0;
    for t in data {
        let w = if uniform { 1.0 } else { t.weight };
        let out = model.forward(&t.input, None).output;
        acc += w * sample_objective(model.head(), &out, t, class_weights).0;
        norm += w;
    }
    Some(acc / norm)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn step(&mut self, model: &mut Model, grad: &mut [f64], cfg: &TrainConfig) {
        self.t += 1;
        let b1t = 1.0 - cfg.beta1.powi(self.t);
        let b2t = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..grad.len() {
            if !model.mask[i] {
                grad[i] = 0.0;
                self.m[i] = 0.0;
                self.v[i] = 0.0;
                continue;
            }
            let g = grad[i];
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let mh = self.m[i] / b1t;
            let vh = self.v[i] / b2t;
            model.params[i] -= cfg.learning_rate * mh / (vh.sqrt() + cfg.adam_epsilon);
        }
        model.apply_mask();
    }
}

/// Batch gradient and weighted loss sum. Each sample's term is scaled by
/// `1 / (n_batch * mean_weight)` so weights keep their relative meaning
/// across batches.
fn batch_gradient(
    model: &Model,
    data: &[Target],
    batch: &[usize],
    epoch: usize,
    scale: f64,
    cfg: &TrainConfig,
    class_weights: &[f64],
) -> (Vec<f64>, f64) {
    let per_sample = |&i: &usize| -> (Vec<f64>, f64) {
        let t = &data[i];
        let mut g = vec![0.0; model.n_params()];
        if t.weight == 0.0 {
            return (g, 0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed(cfg.seed, epoch, i));
        let tr = model.forward(&t.input, Some(&mut rng));
        let (l, dout) = sample_objective(model.head(), &tr.output, t, class_weights);
        let dout: Vec<f64> = dout.iter().map(|d| d * t.weight * scale).collect();
        model.backward(&tr, &dout, &mut g);
        (g, t.weight * l)
    };
    let mut grad = vec![0.0; model.n_params()];
    let mut loss_sum = 0.0;
    if crate::parallel::resolve_threads(cfg.threads) <= 1 {
        for i in batch {
            let (g, l) = per_sample(i);
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
            loss_sum += l;
        }
    } else {
        for (g, l) in crate::parallel::map(batch, cfg.threads, per_sample) {
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
            loss_sum += l;
        }
    }
    (grad, loss_sum)
}

fn default_class_weights(model: &Model, data: &[Target], cfg: &TrainConfig) -> Result<Vec<f64>> {
    if model.head() != HeadKind::Classification {
        return Ok(vec![1.0; 4]);
    }
    let mut counts = [0usize; 4];
    for t in data {
        counts[t.class] += 1;
    }
    let missing: Vec<EmotionQuadrant> = (0..4)
        .filter(|&c| counts[c] == 0)
        .filter_map(EmotionQuadrant::from_index)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingClasses(missing));
    }
    Ok(cfg.class_weights.clone().unwrap_or_else(|| vec![1.0; 4]))
}

/// Train `model` in place. With a schedule the epoch count is
/// `warmup + prune + finetune` and weights are pruned after every
/// prune-phase epoch; otherwise `cfg.epochs` plain epochs run.
pub fn train(
    model: &mut Model,
    train_set: &[TrainingSample],
    valid_set: &[TrainingSample],
    cfg: &TrainConfig,
    schedule: Option<&PruningSchedule>,
) -> Result<TrainReport> {
    if train_set.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be positive".into()));
    }
    let data = prepare_all(model, train_set)?;
    let valid = prepare_all(model, valid_set)?;
    let class_weights = default_class_weights(model, &data, cfg)?;
    let mean_weight = data.iter().map(|t| t.weight).sum::<f64>() / data.len() as f64;
    if mean_weight <= 0.0 {
        return Err(Error::DegenerateBatch);
    }

    let phases: Vec<Phase> = match schedule {
        Some(s) => {
            s.validate()?;
            pruning::check_reachable(model, s)?;
            s.phases()
        }
        None => vec![Phase::Train; cfg.epochs],
    };
    let first_stable = phases.iter().rposition(|p| *p == Phase::Prune).map_or(0, |i| i + 1);
    let initial = schedule.map(|s| pruning::active_counts(model, &s.options)).unwrap_or_default();

    let mut adam = Adam {
        m: vec![0.0; model.n_params()],
        v: vec![0.0; model.n_params()],
        t: 0,
    };
    let mut report = TrainReport::default();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut pruned_epochs = 0;

    for (epoch, &phase) in phases.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(cfg.seed ^ 0xA5A5) ^ epoch as u64);
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            if batch.iter().all(|&i| data[i].weight == 0.0) {
                continue;
            }
            let scale = 1.0 / (batch.len() as f64 * mean_weight);
            let (mut grad, l) = batch_gradient(model, &data, batch, epoch, scale, cfg, &class_weights);
            if !l.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            weighted += l;
            adam.step(model, &mut grad, cfg);
        }
        let train_loss = weighted / (data.len() as f64 * mean_weight);

        if phase == Phase::Prune {
            let s = schedule.expect("prune phase implies schedule");
            pruned_epochs += 1;
            pruning::prune_to_schedule(model, s, &initial, pruned_epochs);
        }
        let valid_loss = evaluate_loss(model, &valid, &class_weights);
        if let Some(v) = valid_loss {
            if !v.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: usize::MAX });
            }
        }
        let nonzero = pruning::active_prunable(model, schedule.map(|s| &s.options));
        log::debug!("epoch {epoch} {phase:?} train {train_loss:.4} valid {valid_loss:?} nonzero {nonzero}");
        report.epochs.push(EpochRecord {
            epoch,
            phase,
            train_loss,
            valid_loss,
            nonzero,
        });
        if cfg.best_validation && epoch >= first_stable {
            if let Some(v) = valid_loss {
                if best.as_ref().is_none_or(|(bv, _, _)| v < *bv) {
                    best = Some((v, epoch, model.params.clone()));
                }
            }
        }
    }
    if let Some((_, epoch, params)) = best {
        model.params = params;
        report.best_epoch = Some(epoch);
    }
    Ok(report)
}

/// Fit input normalization on the training bundles and start the output
/// layer at the mean label (regression) so early epochs are not spent
/// learning the offset.
pub fn initialize_from_data(model: &mut Model, train_set: &[TrainingSample]) -> Result<()> {
    let bundles: Vec<&FeatureBundle> = train_set.iter().map(|s| &s.bundle).collect();
    model.fit_normalizer(&bundles)?;
    if model.head() == HeadKind::Regression && !train_set.is_empty() {
        let n = train_set.len() as f64;
        let v = train_set.iter().map(|s| s.label.valence()).sum::<f64>() / n;
        let a = train_set.iter().map(|s| s.label.arousal()).sum::<f64>() / n;
        model.set_output_bias(&[v, a]);
    }
    Ok(())
}

/// Loss of the model on `samples` (weighted MAE or weighted cross-entropy),
/// dropout off.
pub fn dataset_loss(model: &Model, samples: &[TrainingSample]) -> Result<f64> {
    let data = prepare_all(model, samples)?;
    evaluate_loss(model, &data, &[1.0; 4]).ok_or_else(|| Error::Empty("dataset".into()))
}

/// Loss and analytic gradient of one sample with fixed dropout masks
/// (seeded by `(seed, epoch, index)`); used for gradient checking.
pub fn sample_loss_and_gradient(
    model: &Model,
    sample: &TrainingSample,
    dropout: Option<(u64, usize, usize)>,
) -> Result<(f64, Vec<f64>)> {
    let t = Target {
        input: model.prepare(&sample.bundle)?,
        label: sample.label.as_array(),
        class: sample.label.quadrant().index(),
        weight: 1.0,
    };
    let mut rng = dropout.map(|(s, e, i)| ChaCha8Rng::seed_from_u64(dropout_seed(s, e, i)));
    let tr = model.forward(&t.input, rng.as_mut());
    let (l, dout) = sample_objective(model.head(), &tr.output, &t, &[1.0; 4]);
    let mut g = vec![0.0; model.n_params()];
    model.backward(&tr, &dout, &mut g);
    Ok((l, g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lab(v: f64, a: f64) -> EmotionLabel {
        EmotionLabel::new(v, a).unwrap()
    }

    #[test]
    fn loss_examples() {
        let l = loss(&[[2.0, 4.0]], &[lab(3.0, 3.0)], &[1.0]).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
        let preds = [[2.0, 4.0], [9.0, 9.0]];
        let labels = [lab(3.0, 3.0), lab(1.0, 1.0)];
        assert!((loss(&preds, &labels, &[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        let equal = loss(&preds, &labels, &[0.3, 0.3]).unwrap();
        let unweighted = (1.0 + 1.0 + 8.0 + 8.0) / 4.0;
        assert!((equal - unweighted).abs() < 1e-12);
        assert!(matches!(loss(&preds, &labels, &[0.0, 0.0]), Err(Error::DegenerateBatch)));
    }

    #[test]
    fn dropout_seeds_differ() {
        assert_ne!(dropout_seed(1, 0, 0), dropout_seed(1, 0, 1));
        assert_ne!(dropout_seed(1, 0, 0), dropout_seed(1, 1, 0));
        assert_eq!(dropout_seed(4, 2, 9), dropout_seed(4, 2, 9));
    }
}
