//! Iterative magnitude pruning in three phases: warmup, prune, finetune.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::network::{Branch, Model};
use crate::model::{train, TrainConfig, TrainReport, TrainingSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Plain training without a schedule.
    Train,
    Warmup,
    Prune,
    Finetune,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Train => "train",
            Phase::Warmup => "warmup",
            Phase::Prune => "prune",
            Phase::Finetune => "finetune",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneScope {
    /// One magnitude ranking across all prunable tensors.
    #[default]
    Global,
    /// Every tensor loses the same fraction.
    PerLayer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneOptions {
    pub scope: PruneScope,
    /// Treat recurrent weights as prunable.
    pub include_lstm: bool,
}

impl Default for PruneOptions {
    fn default() -> Self {
        Self {
            scope: PruneScope::Global,
            include_lstm: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruningSchedule {
    pub warmup_epochs: usize,
    pub prune_epochs: usize,
    pub finetune_epochs: usize,
    pub prune_fraction_per_epoch: f64,
    #[serde(flatten)]
    pub options: PruneOptions,
}

impl Default for PruningSchedule {
    fn default() -> Self {
        Self {
            warmup_epochs: 10,
            prune_epochs: 10,
            finetune_epochs: 10,
            prune_fraction_per_epoch: 0.2,
            options: PruneOptions::default(),
        }
    }
}

impl PruningSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.warmup_epochs < 1 {
            return Err(Error::InvalidSchedule("warmup_epochs must be at least 1".into()));
        }
        let f = self.prune_fraction_per_epoch;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::InvalidSchedule(format!(
                "prune_fraction_per_epoch {f} outside (0, 1)"
            )));
        }
        Ok(())
    }

    pub fn total_epochs(&self) -> usize {
        self.warmup_epochs + self.prune_epochs + self.finetune_epochs
    }

    pub fn phases(&self) -> Vec<Phase> {
        std::iter::repeat(Phase::Warmup)
            .take(self.warmup_epochs)
            .chain(std::iter::repeat(Phase::Prune).take(self.prune_epochs))
            .chain(std::iter::repeat(Phase::Finetune).take(self.finetune_epochs))
            .collect()
    }

    /// Retained weights after `k` prune epochs starting from `n0`.
    pub fn target_count(&self, n0: usize, k: usize) -> usize {
        let keep = (1.0 - self.prune_fraction_per_epoch).powi(k as i32);
        (n0 as f64 * keep).round() as usize
    }

    pub fn final_retained_fraction(&self) -> f64 {
        (1.0 - self.prune_fraction_per_epoch).powi(self.prune_epochs as i32)
    }
}

fn prunable(model: &Model, opts: &PruneOptions) -> Vec<usize> {
    model
        .tensors
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_weight && (opts.include_lstm || t.branch != Branch::Lstm))
        .map(|(i, _)| i)
        .collect()
}

/// Active prunable weights per prunable tensor.
pub fn active_counts(model: &Model, opts: &PruneOptions) -> Vec<usize> {
    prunable(model, opts)
        .into_iter()
        .map(|i| model.mask[model.tensors[i].range()].iter().filter(|m| **m).count())
        .collect()
}

pub fn active_prunable(model: &Model, opts: Option<&PruneOptions>) -> usize {
    let default = PruneOptions::default();
    active_counts(model, opts.unwrap_or(&default)).iter().sum()
}

/// Mask the `count` smallest-magnitude active weights among `indices`;
/// equal magnitudes go in index order.
fn mask_smallest(model: &mut Model, mut indices: Vec<usize>, count: usize) -> usize {
    indices.retain(|&i| model.mask[i]);
    indices.sort_by(|&a, &b| {
        model.params[a]
            .abs()
            .total_cmp(&model.params[b].abs())
            .then(a.cmp(&b))
    });
    let n = count.min(indices.len());
    for &i in &indices[..n] {
        model.mask[i] = false;
        model.params[i] = 0.0;
    }
    n
}

fn tensor_indices(model: &Model, tensors: &[usize]) -> Vec<usize> {
    tensors.iter().flat_map(|&t| model.tensors[t].range()).collect()
}

/// Mask `round(active * fraction)` of the active prunable weights with the
/// smallest magnitude. Returns the number newly masked.
pub fn prune_step(model: &mut Model, fraction: f64, opts: &PruneOptions) -> Result<usize> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!("prune fraction {fraction} outside [0, 1)")));
    }
    let tensors = prunable(model, opts);
    match opts.scope {
        PruneScope::Global => {
            let idx = tensor_indices(model, &tensors);
            let active = idx.iter().filter(|&&i| model.mask[i]).count();
            let k = (active as f64 * fraction).round() as usize;
            Ok(mask_smallest(model, idx, k))
        }
        PruneScope::PerLayer => {
            let mut total = 0;
            for t in tensors {
                let idx = tensor_indices(model, &[t]);
                let active = idx.iter().filter(|&&i| model.mask[i]).count();
                let k = (active as f64 * fraction).round() as usize;
                total += mask_smallest(model, idx, k);
            }
            Ok(total)
        }
    }
}

/// Prune so that after `k` prune epochs exactly `round(n0 (1 - f)^k)`
/// weights remain (per tensor under per-layer scope). Rounding once against
/// the initial count keeps the final fraction within one weight.
pub(crate) fn prune_to_schedule(model: &mut Model, s: &PruningSchedule, initial: &[usize], k: usize) -> usize {
    let tensors = prunable(model, &s.options);
    match s.options.scope {
        PruneScope::Global => {
            let idx = tensor_indices(model, &tensors);
            let active = idx.iter().filter(|&&i| model.mask[i]).count();
            let target = s.target_count(initial.iter().sum(), k);
            mask_smallest(model, idx, active.saturating_sub(target))
        }
        PruneScope::PerLayer => {
            let mut total = 0;
            for (j, t) in tensors.into_iter().enumerate() {
                let idx = tensor_indices(model, &[t]);
                let active = idx.iter().filter(|&&i| model.mask[i]).count();
                let target = s.target_count(initial[j], k);
                total += mask_smallest(model, idx, active.saturating_sub(target));
            }
            total
        }
    }
}

/// Reject schedules that would leave no prunable weight (or, per layer, an
/// empty tensor).
pub fn check_reachable(model: &Model, s: &PruningSchedule) -> Result<()> {
    if s.prune_epochs == 0 {
        return Ok(());
    }
    let counts = active_counts(model, &s.options);
    let empty = match s.options.scope {
        PruneScope::Global => s.target_count(counts.iter().sum(), s.prune_epochs) == 0,
        PruneScope::PerLayer => counts.iter().any(|&n| n > 0 && s.target_count(n, s.prune_epochs) == 0),
    };
    if empty {
        return Err(Error::InvalidSchedule(format!(
            "{} prune epochs at fraction {} remove every prunable weight",
            s.prune_epochs, s.prune_fraction_per_epoch
        )));
    }
    Ok(())
}

/// Train under `schedule`; the returned report is the sparsity trace.
pub fn train_with_pruning(
    model: &mut Model,
    train_set: &[TrainingSample],
    valid_set: &[TrainingSample],
    cfg: &TrainConfig,
    schedule: &PruningSchedule,
) -> Result<TrainReport> {
    train(model, train_set, valid_set, cfg, Some(schedule))
}

/// `epoch,phase,nonzero,valid_loss`
pub fn sparsity_csv(report: &TrainReport) -> String {
    let mut s = String::from("epoch,phase,nonzero,valid_loss\n");
    for r in &report.epochs {
        let v = r.valid_loss.map_or(String::new(), |v| v.to_string());
        s.push_str(&format!("{},{},{},{}\n", r.epoch, r.phase.name(), r.nonzero, v));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_validation() {
        let mut s = PruningSchedule::default();
        assert!(s.validate().is_ok());
        s.warmup_epochs = 0;
        assert!(s.validate().is_err());
        s.warmup_epochs = 1;
        s.prune_fraction_per_epoch = 1.0;
        assert!(s.validate().is_err());
        s.prune_fraction_per_epoch = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn phases_in_order() {
        let s = PruningSchedule {
            warmup_epochs: 2,
            prune_epochs: 1,
            finetune_epochs: 2,
            ..Default::default()
        };
        use Phase::*;
        assert_eq!(s.phases(), vec![Warmup, Warmup, Prune, Finetune, Finetune]);
    }

    #[test]
    fn target_counts() {
        let s = PruningSchedule {
            prune_fraction_per_epoch: 0.2,
            prune_epochs: 3,
            ..Default::default()
        };
        assert_eq!(s.target_count(1000, 3), 512);
        assert!((s.final_retained_fraction() - 0.512).abs() < 1e-12);
    }
}
