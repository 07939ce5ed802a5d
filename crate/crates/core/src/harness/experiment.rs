//! Per-target evaluation runs: general training (optionally pruned),
//! optional GSI fine-tuning, trajectory-median scoring.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostics;
use crate::error::{Error, Result};
use crate::features::table::{FeatureRow, FeatureTable};
use crate::features::{FeatureBundle, FeatureSet};
use crate::model::train::initialize_from_data;
use crate::model::{train, Model, NetworkConfig, TrainConfig, TrainReport, TrainingSample};
use crate::parallel;
use crate::personalize::{compute_gsi, fine_tune, GaitSimilarity, DEFAULT_EPSILON};
use crate::pruning::PruningSchedule;

use super::metrics::{metrics, trajectory_score, Metrics};
use super::split::{split_scenario_b, Scenario, Split};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub scenario: Scenario,
    /// Target data moved into training under scenario B.
    pub target_minutes: f64,
    /// Persons evaluated as target; empty means every person.
    pub targets: Vec<String>,
    pub feature_set: FeatureSet,
    pub personalized: bool,
    pub pruned: bool,
    pub network: NetworkConfig,
    /// General-model training; `epochs` applies when pruning is off.
    pub general: TrainConfig,
    pub pruning: PruningSchedule,
    pub fine_tune: TrainConfig,
    pub gsi_epsilon: f64,
    pub seed: u64,
    /// Targets evaluated concurrently; set by the caller, not serialized.
    #[serde(skip)]
    pub threads: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::B,
            target_minutes: 10.0,
            targets: Vec::new(),
            feature_set: FeatureSet::Both,
            personalized: true,
            pruned: true,
            network: NetworkConfig::default(),
            general: TrainConfig::default(),
            pruning: PruningSchedule::default(),
            fine_tune: TrainConfig {
                epochs: 10,
                learning_rate: 5e-4,
                ..TrainConfig::default()
            },
            gsi_epsilon: DEFAULT_EPSILON,
            seed: 0,
            threads: 1,
        }
    }
}

impl EvaluationConfig {
    pub fn cell(&self) -> Cell {
        Cell {
            feature_set: self.feature_set,
            personalized: self.personalized,
            pruned: self.pruned,
        }
    }

    fn minutes(&self) -> f64 {
        match self.scenario {
            Scenario::A => 0.0,
            Scenario::B => self.target_minutes,
        }
    }
}

/// One configuration of the ablation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub feature_set: FeatureSet,
    pub personalized: bool,
    pub pruned: bool,
}

impl Cell {
    pub fn name(&self) -> String {
        format!(
            "{}-{}-{}",
            self.feature_set.name(),
            if self.personalized { "personalized" } else { "general" },
            if self.pruned { "pruned" } else { "unpruned" }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPrediction {
    pub person_id: String,
    pub trajectory_id: String,
    pub footsteps: usize,
    pub predicted: [f64; 2],
    pub truth: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonReport {
    pub person_id: String,
    pub metrics: Metrics,
    pub trajectories: usize,
    /// Active fraction of prunable weights in the evaluated model.
    pub retained_fraction: f64,
    pub gsi: Vec<GaitSimilarity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub scenario: Scenario,
    pub feature_set: FeatureSet,
    pub personalized: bool,
    pub pruned: bool,
    pub fingerprint: Option<String>,
    pub persons: Vec<PersonReport>,
    /// Mean over target persons (Pearson over persons where defined).
    pub mean: Metrics,
    /// Over all test trajectories of all targets.
    pub pooled: Metrics,
    pub trajectories: Vec<TrajectoryPrediction>,
    pub warnings: Vec<String>,
}

impl EvaluationReport {
    pub fn cell(&self) -> Cell {
        Cell {
            feature_set: self.feature_set,
            personalized: self.personalized,
            pruned: self.pruned,
        }
    }

    /// Mean of the valence and arousal MAE averaged over persons.
    pub fn mae(&self) -> f64 {
        0.5 * (self.mean.valence.mae + self.mean.arousal.mae)
    }
}

pub fn samples(rows: &[FeatureRow], idx: &[usize]) -> Vec<TrainingSample> {
    idx.iter()
        .map(|&i| {
            let r = &rows[i];
            TrainingSample {
                bundle: r.bundle.clone(),
                label: r.label,
                weight: 1.0,
                person_id: r.person_id.clone(),
                trajectory_id: r.trajectory_id.clone(),
            }
        })
        .collect()
}

/// Fresh general model trained on `train_set`, pruned under `schedule`.
pub fn train_general(
    table: &FeatureTable,
    train_set: &[TrainingSample],
    valid_set: &[TrainingSample],
    network: &NetworkConfig,
    cfg: &TrainConfig,
    feature_set: FeatureSet,
    schedule: Option<&PruningSchedule>,
) -> Result<(Model, TrainReport)> {
    let mut model = Model::new(network.clone(), &table.layout, feature_set)?;
    initialize_from_data(&mut model, train_set)?;
    let report = train(&mut model, train_set, valid_set, cfg, schedule)?;
    model.fingerprint = table.fingerprint.clone();
    Ok((model, report))
}

/// Median-aggregated trajectory predictions for the rows in `idx`.
pub fn predict_trajectories(model: &Model, rows: &[FeatureRow], idx: &[usize]) -> Result<Vec<TrajectoryPrediction>> {
    let mut groups: BTreeMap<(&str, &str), (Vec<[f64; 2]>, [f64; 2])> = BTreeMap::new();
    for &i in idx {
        let r = &rows[i];
        let (out, _) = model.predict(&r.bundle)?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch: 0, batch: 0 });
        }
        groups
            .entry((&r.person_id, &r.trajectory_id))
            .or_insert_with(|| (Vec::new(), r.label.as_array()))
            .0
            .push([out[0], out[1]]);
    }
    groups
        .into_iter()
        .map(|((p, t), (preds, truth))| {
            Ok(TrajectoryPrediction {
                person_id: p.to_string(),
                trajectory_id: t.to_string(),
                footsteps: preds.len(),
                predicted: trajectory_score(&preds)?,
                truth,
            })
        })
        .collect()
}

pub(crate) fn score(trajs: &[TrajectoryPrediction], diag: &mut Diagnostics) -> Result<Metrics> {
    let p: Vec<[f64; 2]> = trajs.iter().map(|t| t.predicted).collect();
    let t: Vec<[f64; 2]> = trajs.iter().map(|t| t.truth).collect();
    metrics(&p, &t, diag)
}

struct TargetOutcome {
    cell: Cell,
    person: PersonReport,
    trajectories: Vec<TrajectoryPrediction>,
    warnings: Vec<String>,
}

fn derive_seed(base: u64, target_index: usize) -> u64 {
    base.wrapping_mul(0x2545_F491_4F6C_DD1D).wrapping_add(target_index as u64 + 1)
}

fn evaluate_target(
    table: &FeatureTable,
    target: &str,
    target_index: usize,
    split: &Split,
    cfg: &EvaluationConfig,
    cells: &[Cell],
) -> Result<Vec<TargetOutcome>> {
    let rows = &table.rows;
    let tr = samples(rows, &split.train);
    let va = samples(rows, &split.valid);
    let seed = derive_seed(cfg.seed, target_index);
    let network = NetworkConfig {
        seed: cfg.network.seed ^ seed,
        ..cfg.network.clone()
    };
    let general_cfg = TrainConfig {
        seed,
        ..cfg.general.clone()
    };
    let tune_cfg = TrainConfig {
        seed: seed ^ 0x5EED,
        ..cfg.fine_tune.clone()
    };
    // Features the GSI is computed from: the target's training trajectories
    // under scenario B, its unlabelled test footsteps under scenario A.
    let own: Vec<&FeatureBundle> = {
        let pool: Vec<&FeatureBundle> = split
            .train
            .iter()
            .chain(&split.valid)
            .filter(|&&i| rows[i].person_id == target)
            .map(|&i| &rows[i].bundle)
            .collect();
        if pool.is_empty() {
            split.test.iter().map(|&i| &rows[i].bundle).collect()
        } else {
            pool
        }
    };
    let target_in_train = split.train.iter().any(|&i| rows[i].person_id == target);

    let mut general: BTreeMap<(FeatureSet, bool), Model> = BTreeMap::new();
    let mut out = Vec::new();
    for &cell in cells {
        let key = (cell.feature_set, cell.pruned);
        if !general.contains_key(&key) {
            let schedule = cell.pruned.then_some(&cfg.pruning);
            let (m, _) = train_general(table, &tr, &va, &network, &general_cfg, cell.feature_set, schedule)?;
            general.insert(key, m);
        }
        let base = &general[&key];
        let (model, gsi) = if cell.personalized {
            let others: Vec<TrainingSample> = tr.iter().filter(|s| s.person_id != target).cloned().collect();
            let gsi = compute_gsi(base, &own, &others, cfg.gsi_epsilon, 1)?;
            let target_id = target_in_train.then_some(target);
            let (m, _) = fine_tune(base, &tr, &va, &gsi, target_id, &tune_cfg)?;
            (m, gsi)
        } else {
            (base.clone(), Vec::new())
        };
        let trajectories = predict_trajectories(&model, rows, &split.test)?;
        let mut diag = Diagnostics::new();
        let m = score(&trajectories, &mut diag)?;
        let (active, total) = model.retained_weights();
        out.push(TargetOutcome {
            cell,
            person: PersonReport {
                person_id: target.to_string(),
                metrics: m,
                trajectories: trajectories.len(),
                retained_fraction: if total == 0 { 1.0 } else { active as f64 / total as f64 },
                gsi,
            },
            trajectories,
            warnings: diag.warnings().iter().map(|w| format!("{target}: {w}")).collect(),
        });
    }
    Ok(out)
}

fn targets(table: &FeatureTable, cfg: &EvaluationConfig) -> Result<Vec<String>> {
    let persons = table.persons();
    if cfg.targets.is_empty() {
        return Ok(persons);
    }
    for t in &cfg.targets {
        if !persons.contains(t) {
            return Err(Error::MissingTarget(t.clone()));
        }
    }
    Ok(cfg.targets.clone())
}

fn mean_metrics(persons: &[PersonReport]) -> Metrics {
    let n = persons.len() as f64;
    let avg = |f: &dyn Fn(&Metrics) -> f64| persons.iter().map(|p| f(&p.metrics)).sum::<f64>() / n;
    let avg_r = |f: &dyn Fn(&Metrics) -> Option<f64>| {
        let v: Vec<f64> = persons.iter().filter_map(|p| f(&p.metrics)).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let mut m = Metrics::default();
    m.valence.mae = avg(&|m| m.valence.mae);
    m.arousal.mae = avg(&|m| m.arousal.mae);
    m.valence.pearson = avg_r(&|m| m.valence.pearson);
    m.arousal.pearson = avg_r(&|m| m.arousal.pearson);
    m
}

/// Evaluate every cell on the same splits and seeds. Targets run
/// concurrently; the result does not depend on the thread count.
pub fn run_cells(table: &FeatureTable, cfg: &EvaluationConfig, cells: &[Cell]) -> Result<Vec<EvaluationReport>> {
    if table.is_empty() {
        return Err(Error::Empty("feature table".into()));
    }
    if cfg.pruned || cells.iter().any(|c| c.pruned) {
        cfg.pruning.validate()?;
    }
    let targets = targets(table, cfg)?;
    let all = table.persons();
    let jobs: Vec<(usize, &String)> = targets
        .iter()
        .map(|t| (all.iter().position(|p| p == t).unwrap_or(0), t))
        .collect();
    let per_target = parallel::map(&jobs, cfg.threads, |&(k, target)| {
        log::info!("evaluating target {target}");
        let split = split_scenario_b(&table.rows, target, cfg.minutes(), derive_seed(cfg.seed, k))?;
        evaluate_target(table, target, k, &split, cfg, cells)
    });
    let mut by_cell: BTreeMap<Cell, Vec<TargetOutcome>> = BTreeMap::new();
    for outcome in per_target {
        for o in outcome? {
            by_cell.entry(o.cell).or_default().push(o);
        }
    }
    cells
        .iter()
        .map(|cell| {
            let outcomes = by_cell.remove(cell).unwrap_or_default();
            let persons: Vec<PersonReport> = outcomes.iter().map(|o| o.person.clone()).collect();
            let trajectories: Vec<TrajectoryPrediction> =
                outcomes.iter().flat_map(|o| o.trajectories.clone()).collect();
            let mut warnings: Vec<String> = outcomes.iter().flat_map(|o| o.warnings.clone()).collect();
            let mut diag = Diagnostics::new();
            let pooled = score(&trajectories, &mut diag)?;
            warnings.extend(diag.warnings().iter().map(|w| format!("pooled: {w}")));
            Ok(EvaluationReport {
                scenario: cfg.scenario,
                feature_set: cell.feature_set,
                personalized: cell.personalized,
                pruned: cell.pruned,
                fingerprint: table.fingerprint.clone(),
                mean: mean_metrics(&persons),
                pooled,
                persons,
                trajectories,
                warnings,
            })
        })
        .collect()
}

/// Configured cell only.
pub fn evaluate(table: &FeatureTable, cfg: &EvaluationConfig) -> Result<EvaluationReport> {
    Ok(run_cells(table, cfg, &[cfg.cell()])?.remove(0))
}

/// Gait features only, general model only.
pub fn run_baseline(table: &FeatureTable, cfg: &EvaluationConfig) -> Result<EvaluationReport> {
    let cell = Cell {
        feature_set: FeatureSet::GaitOnly,
        personalized: false,
        pruned: cfg.pruned,
    };
    Ok(run_cells(table, cfg, &[cell])?.remove(0))
}

/// All twelve combinations of feature set, personalization and pruning.
pub fn ablation_cells() -> Vec<Cell> {
    let mut cells = Vec::with_capacity(12);
    for feature_set in FeatureSet::ALL {
        for personalized in [true, false] {
            for pruned in [true, false] {
                cells.push(Cell {
                    feature_set,
                    personalized,
                    pruned,
                });
            }
        }
    }
    cells
}

pub fn run_ablations(table: &FeatureTable, cfg: &EvaluationConfig) -> Result<Vec<EvaluationReport>> {
    run_cells(table, cfg, &ablation_cells())
}
