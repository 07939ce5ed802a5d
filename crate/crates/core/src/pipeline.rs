//! Stage implementations behind the command-line front end. Every stage
//! reads and writes files inside a workspace directory and stamps its
//! outputs with the configuration fingerprint.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::diag::Diagnostics;
use crate::error::{Error, Result};
use crate::features::table::{FeatureRow, FeatureTable};
use crate::features::{extract_bundle, feature_deviation_heatmap, BundleLayout, FeatureConfig, Heatmap, TrajectoryContext};
use crate::harness::{self, report, split_scenario_b, EvaluationConfig, EvaluationReport, Scenario};
use crate::model::{load_checkpoint, save_checkpoint, Model};
use crate::parallel;
use crate::personalize::{compute_gsi, fine_tune, gsi_csv};
use crate::preprocess::{preprocess_signal, FootstepSegment, PreprocessConfig};
use crate::pruning::sparsity_csv;
use crate::signal::{read_signal_set, write_signal_set, EmotionLabel, VibrationSignal};

pub const SIGNALS: &str = "signals.vibs";
pub const SEGMENTS: &str = "segments.vibs";
pub const TRAJECTORIES: &str = "trajectories.json";
pub const FEATURES: &str = "features.vibf";

/// Files of one pipeline run.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn subdir(&self, name: &str) -> Result<PathBuf> {
        let p = self.root.join(name);
        std::fs::create_dir_all(&p)?;
        Ok(p)
    }

    pub fn models(&self) -> Result<PathBuf> {
        self.subdir("models")
    }

    pub fn reports(&self) -> Result<PathBuf> {
        self.subdir("reports")
    }
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingInput(path.to_path_buf()))
    }
}

/// `# fingerprint=...` header line for CSV artifacts.
fn stamp_csv(fingerprint: &str, body: &str) -> String {
    format!("# fingerprint={fingerprint}\n{body}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn note_fingerprint(what: &str, found: Option<&str>, expected: &str) {
    if found != Some(expected) {
        log::warn!("{what} was produced under a different configuration ({found:?})");
    }
}

/// Per-trajectory bookkeeping kept alongside the segment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryInfo {
    pub person_id: String,
    pub trajectory_id: String,
    pub label: EmotionLabel,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    /// Detected footstep peaks whose windows fit inside the recording.
    pub peaks_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryIndex {
    pub fingerprint: String,
    pub trajectories: Vec<TrajectoryInfo>,
}

#[derive(Debug, Clone)]
pub struct SegmentedTrajectory {
    pub info: TrajectoryInfo,
    pub segments: Vec<FootstepSegment>,
}

/// Repair, detect and cut every recording. Recordings without a label are
/// rejected; trajectories with fewer than two usable footsteps are dropped
/// with a warning.
pub fn segment_all(
    signals: &[VibrationSignal],
    cfg: &PreprocessConfig,
    threads: usize,
    diag: &mut Diagnostics,
) -> Result<Vec<SegmentedTrajectory>> {
    let out = parallel::map(signals, threads, |s| -> Result<(SegmentedTrajectory, Diagnostics)> {
        let label = s
            .label()
            .ok_or_else(|| Error::InvalidSignal(format!("trajectory {} has no label", s.meta().trajectory_id)))?;
        let p = preprocess_signal(s, cfg)?;
        let fs = s.sample_rate_hz();
        let info = TrajectoryInfo {
            person_id: s.meta().person_id.clone(),
            trajectory_id: s.meta().trajectory_id.clone(),
            label,
            sample_rate_hz: fs,
            duration_s: s.duration_s(),
            peaks_s: p.segments.iter().map(|g| g.peak_index_in_signal() as f64 / fs).collect(),
        };
        Ok((
            SegmentedTrajectory {
                info,
                segments: p.segments,
            },
            p.diagnostics,
        ))
    });
    let mut trajs = Vec::with_capacity(out.len());
    for r in out {
        let (t, d) = r?;
        diag.extend(d);
        if t.segments.len() < 2 {
            diag.warn(crate::diag::Warning::TooFewFootsteps(t.info.trajectory_id.clone()));
            continue;
        }
        trajs.push(t);
    }
    Ok(trajs)
}

/// Feature table of all segmented trajectories.
pub fn extract_all(
    trajs: &[SegmentedTrajectory],
    cfg: &FeatureConfig,
    threads: usize,
    fingerprint: Option<String>,
    diag: &mut Diagnostics,
) -> Result<FeatureTable> {
    let first = trajs
        .iter()
        .flat_map(|t| t.segments.first())
        .next()
        .ok_or_else(|| Error::Empty("no footstep segments".into()))?;
    let layout = BundleLayout::for_segments(cfg, first.len(), first.sample_rate_hz());
    let jobs: Vec<(usize, usize)> = trajs
        .iter()
        .enumerate()
        .flat_map(|(t, tr)| (0..tr.segments.len()).map(move |s| (t, s)))
        .collect();
    let contexts: Vec<TrajectoryContext> = trajs
        .iter()
        .map(|t| TrajectoryContext::from_peak_times(&t.info.peaks_s))
        .collect::<Result<_>>()?;
    let bundles = parallel::map(&jobs, threads, |&(t, s)| {
        let mut d = Diagnostics::new();
        extract_bundle(&trajs[t].segments[s], &contexts[t], cfg, &mut d).map(|b| (b, d))
    });
    let mut table = FeatureTable::new(layout);
    table.fingerprint = fingerprint;
    for (&(t, _), r) in jobs.iter().zip(bundles) {
        let (bundle, d) = r?;
        diag.extend(d);
        let info = &trajs[t].info;
        table.push(FeatureRow {
            person_id: info.person_id.clone(),
            trajectory_id: info.trajectory_id.clone(),
            label: info.label,
            trajectory_duration_s: info.duration_s,
            bundle,
        })?;
    }
    Ok(table)
}

/// Signals to feature table in memory.
pub fn build_table(signals: &[VibrationSignal], cfg: &PipelineConfig) -> Result<FeatureTable> {
    let mut diag = Diagnostics::new();
    let trajs = segment_all(signals, &cfg.preprocess, cfg.threads, &mut diag)?;
    let table = extract_all(&trajs, &cfg.features, cfg.threads, Some(cfg.fingerprint()), &mut diag)?;
    log_warnings(&diag);
    Ok(table)
}

fn log_warnings(diag: &Diagnostics) {
    if diag.is_empty() {
        return;
    }
    let mut counts: std::collections::BTreeMap<String, usize> = std::collections::BTreeMap::new();
    for w in diag.warnings() {
        *counts.entry(w.to_string()).or_default() += 1;
    }
    for (w, n) in counts {
        log::warn!("{w} (x{n})");
    }
}

/// `synth`: render the synthetic population.
pub fn synth(cfg: &PipelineConfig, ws: &Workspace) -> Result<PathBuf> {
    let fp = cfg.fingerprint();
    let signals: Vec<VibrationSignal> = cfg
        .population
        .generate(cfg.seed, cfg.threads)?
        .into_iter()
        .map(|s| {
            let (samples, mut meta) = s.into_parts();
            meta.fingerprint = Some(fp.clone());
            VibrationSignal::new(samples, meta)
        })
        .collect::<Result<_>>()?;
    let path = ws.path(SIGNALS);
    write_signal_set(&signals, &path)?;
    log::info!("wrote {} trajectories to {}", signals.len(), path.display());
    Ok(path)
}

/// `preprocess`: segments plus trajectory index.
pub fn preprocess(cfg: &PipelineConfig, ws: &Workspace) -> Result<(PathBuf, PathBuf)> {
    let fp = cfg.fingerprint();
    let input = ws.path(SIGNALS);
    require(&input)?;
    let signals = read_signal_set(&input)?;
    if let Some(s) = signals.first() {
        note_fingerprint("signal set", s.meta().fingerprint.as_deref(), &fp);
    }
    let mut diag = Diagnostics::new();
    let trajs = segment_all(&signals, &cfg.preprocess, cfg.threads, &mut diag)?;
    log_warnings(&diag);
    let mut segs = Vec::new();
    for t in &trajs {
        for s in &t.segments {
            let mut sig = s.to_signal()?;
            let (samples, mut meta) = sig.into_parts();
            meta.label = Some(t.info.label);
            meta.fingerprint = Some(fp.clone());
            sig = VibrationSignal::new(samples, meta)?;
            segs.push(sig);
        }
    }
    let seg_path = ws.path(SEGMENTS);
    write_signal_set(&segs, &seg_path)?;
    let index = TrajectoryIndex {
        fingerprint: fp,
        trajectories: trajs.into_iter().map(|t| t.info).collect(),
    };
    let idx_path = ws.path(TRAJECTORIES);
    write_text(&idx_path, &(serde_json::to_string_pretty(&index)? + "\n"))?;
    Ok((seg_path, idx_path))
}

/// `extract`: feature table from the segment file.
pub fn extract(cfg: &PipelineConfig, ws: &Workspace) -> Result<PathBuf> {
    let fp = cfg.fingerprint();
    let seg_path = ws.path(SEGMENTS);
    let idx_path = ws.path(TRAJECTORIES);
    require(&seg_path)?;
    require(&idx_path)?;
    let index: TrajectoryIndex = serde_json::from_str(&std::fs::read_to_string(&idx_path)?)?;
    note_fingerprint("trajectory index", Some(&index.fingerprint), &fp);
    let segs = read_signal_set(&seg_path)?;
    let mut by_traj: std::collections::BTreeMap<String, Vec<FootstepSegment>> = Default::default();
    for s in segs {
        let id = s.meta().trajectory_id.clone();
        by_traj.entry(id).or_default().push(FootstepSegment::from_signal(s)?);
    }
    let trajs: Vec<SegmentedTrajectory> = index
        .trajectories
        .into_iter()
        .map(|info| {
            let segments = by_traj.remove(&info.trajectory_id).unwrap_or_default();
            SegmentedTrajectory { info, segments }
        })
        .filter(|t| !t.segments.is_empty())
        .collect();
    let mut diag = Diagnostics::new();
    let table = extract_all(&trajs, &cfg.features, cfg.threads, Some(fp), &mut diag)?;
    log_warnings(&diag);
    let path = ws.path(FEATURES);
    table.write(&path)?;
    log::info!("wrote {} footsteps to {}", table.len(), path.display());
    Ok(path)
}

fn read_features(cfg: &PipelineConfig, ws: &Workspace) -> Result<FeatureTable> {
    let path = ws.path(FEATURES);
    require(&path)?;
    let table = FeatureTable::read(&path)?;
    note_fingerprint("feature table", table.fingerprint.as_deref(), &cfg.fingerprint());
    Ok(table)
}

fn evaluation_config(cfg: &PipelineConfig) -> EvaluationConfig {
    EvaluationConfig {
        seed: cfg.seed,
        threads: cfg.threads,
        ..cfg.evaluation.clone()
    }
}

fn target_index(table: &FeatureTable, target: &str) -> Result<usize> {
    table
        .persons()
        .iter()
        .position(|p| p == target)
        .ok_or_else(|| Error::MissingTarget(target.to_string()))
}

fn target_minutes(ev: &EvaluationConfig) -> f64 {
    match ev.scenario {
        Scenario::A => 0.0,
        Scenario::B => ev.target_minutes,
    }
}

pub fn general_model_path(ws: &Workspace, target: &str) -> Result<PathBuf> {
    Ok(ws.models()?.join(format!("general-{target}.vibm")))
}

pub fn personal_model_path(ws: &Workspace, target: &str) -> Result<PathBuf> {
    Ok(ws.models()?.join(format!("personal-{target}.vibm")))
}

/// Seeds used by the standalone stages for `target`; they match the ones
/// the evaluation protocol uses for the same target.
fn stage_seed(cfg: &PipelineConfig, k: usize) -> u64 {
    cfg.seed.wrapping_mul(0x2545_F491_4F6C_DD1D).wrapping_add(k as u64 + 1)
}

/// `train-general`: general (pruned) model for one target's split.
pub fn train_general(cfg: &PipelineConfig, ws: &Workspace, target: &str) -> Result<PathBuf> {
    let table = read_features(cfg, ws)?;
    let ev = evaluation_config(cfg);
    let k = target_index(&table, target)?;
    let seed = stage_seed(cfg, k);
    let split = split_scenario_b(&table.rows, target, target_minutes(&ev), seed)?;
    let tr = harness::experiment::samples(&table.rows, &split.train);
    let va = harness::experiment::samples(&table.rows, &split.valid);
    let network = crate::model::NetworkConfig {
        seed: ev.network.seed ^ seed,
        ..ev.network.clone()
    };
    let tcfg = crate::model::TrainConfig {
        seed,
        ..ev.general.clone()
    };
    let schedule = ev.pruned.then_some(&ev.pruning);
    let (mut model, report) =
        harness::experiment::train_general(&table, &tr, &va, &network, &tcfg, ev.feature_set, schedule)?;
    let fp = cfg.fingerprint();
    model.fingerprint = Some(fp.clone());
    let path = general_model_path(ws, target)?;
    save_checkpoint(&model, &path)?;
    let dir = ws.models()?;
    write_text(&dir.join(format!("general-{target}-loss.csv")), &stamp_csv(&fp, &report.to_csv()))?;
    write_text(&dir.join(format!("general-{target}-sparsity.csv")), &stamp_csv(&fp, &sparsity_csv(&report)))?;
    Ok(path)
}

/// `personalize`: GSI-weighted fine-tuning of the saved general model.
pub fn personalize(cfg: &PipelineConfig, ws: &Workspace, target: &str) -> Result<PathBuf> {
    let table = read_features(cfg, ws)?;
    let general_path = general_model_path(ws, target)?;
    let general = load_checkpoint(&general_path)?;
    check_fingerprints(&[("features", table.fingerprint.as_deref()), ("general model", general.fingerprint.as_deref())])?;
    let ev = evaluation_config(cfg);
    let k = target_index(&table, target)?;
    let seed = stage_seed(cfg, k);
    let split = split_scenario_b(&table.rows, target, target_minutes(&ev), seed)?;
    let tr = harness::experiment::samples(&table.rows, &split.train);
    let va = harness::experiment::samples(&table.rows, &split.valid);
    let pool: Vec<usize> = split.train.iter().chain(&split.valid).copied().collect();
    let own_idx: Vec<usize> = pool.iter().copied().filter(|&i| table.rows[i].person_id == target).collect();
    let own_idx = if own_idx.is_empty() { split.test.clone() } else { own_idx };
    let own: Vec<_> = own_idx.iter().map(|&i| &table.rows[i].bundle).collect();
    let others: Vec<_> = tr.iter().filter(|s| s.person_id != target).cloned().collect();
    let gsi = compute_gsi(&general, &own, &others, ev.gsi_epsilon, cfg.threads)?;
    let in_train = tr.iter().any(|s| s.person_id == target);
    let tcfg = crate::model::TrainConfig {
        seed: seed ^ 0x5EED,
        ..ev.fine_tune.clone()
    };
    let (mut model, report) = fine_tune(&general, &tr, &va, &gsi, in_train.then_some(target), &tcfg)?;
    let fp = cfg.fingerprint();
    model.fingerprint = Some(fp.clone());
    let path = personal_model_path(ws, target)?;
    save_checkpoint(&model, &path)?;
    let dir = ws.models()?;
    write_text(&dir.join(format!("gsi-{target}.csv")), &stamp_csv(&fp, &gsi_csv(&gsi)))?;
    write_text(&dir.join(format!("personal-{target}-loss.csv")), &stamp_csv(&fp, &report.to_csv()))?;
    Ok(path)
}

/// Error unless every fingerprint is present and equal.
pub fn check_fingerprints(inputs: &[(&str, Option<&str>)]) -> Result<()> {
    let first = inputs.first().and_then(|(_, f)| *f);
    if inputs.iter().all(|(_, f)| f.is_some() && *f == first) {
        return Ok(());
    }
    Err(Error::FingerprintMismatch(
        inputs
            .iter()
            .map(|(n, f)| format!("{n}: {}", f.unwrap_or("none")))
            .collect(),
    ))
}

fn write_reports(cfg: &PipelineConfig, ws: &Workspace, stem: &str, reports: &[EvaluationReport]) -> Result<PathBuf> {
    let dir = ws.reports()?;
    let fp = cfg.fingerprint();
    let json = dir.join(format!("{stem}.json"));
    write_text(&json, &report::report_json(reports)?)?;
    write_text(&dir.join(format!("{stem}.csv")), &stamp_csv(&fp, &report::summary_csv(reports)))?;
    if cfg.svg {
        for r in reports {
            let name = format!("{stem}-{}-mae.svg", r.cell().name());
            write_text(&dir.join(name), &report::mae_bar_svg(r))?;
        }
    }
    Ok(json)
}

fn stamp(mut reports: Vec<EvaluationReport>, fp: &str) -> Vec<EvaluationReport> {
    for r in &mut reports {
        r.fingerprint = Some(fp.to_string());
    }
    reports
}

/// `evaluate`. With `model` set, scores that checkpoint on the target's
/// test split (its fingerprint must match the features); otherwise runs
/// the full protocol for every configured target.
pub fn evaluate(cfg: &PipelineConfig, ws: &Workspace, model: Option<(&Path, &str)>) -> Result<PathBuf> {
    let table = read_features(cfg, ws)?;
    let ev = evaluation_config(cfg);
    let fp = cfg.fingerprint();
    let mut stem = format!("evaluation-{}", ev.scenario.name());
    let reports = match model {
        Some((path, target)) => {
            if let Some(name) = path.file_stem() {
                stem = format!("{stem}-{}", name.to_string_lossy());
            }
            let m = load_checkpoint(path)?;
            check_fingerprints(&[("features", table.fingerprint.as_deref()), ("model", m.fingerprint.as_deref())])?;
            vec![evaluate_checkpoint(&table, &m, &ev, target, stage_seed(cfg, target_index(&table, target)?))?]
        }
        None => harness::run_cells(&table, &ev, &[ev.cell()])?,
    };
    write_reports(cfg, ws, &stem, &stamp(reports, &fp))
}

fn evaluate_checkpoint(
    table: &FeatureTable,
    model: &Model,
    ev: &EvaluationConfig,
    target: &str,
    seed: u64,
) -> Result<EvaluationReport> {
    let split = split_scenario_b(&table.rows, target, target_minutes(ev), seed)?;
    let trajectories = harness::experiment::predict_trajectories(model, &table.rows, &split.test)?;
    let mut diag = Diagnostics::new();
    let m = harness::experiment::score(&trajectories, &mut diag)?;
    let (active, total) = model.retained_weights();
    let person = harness::PersonReport {
        person_id: target.to_string(),
        metrics: m,
        trajectories: trajectories.len(),
        retained_fraction: if total == 0 { 1.0 } else { active as f64 / total as f64 },
        gsi: Vec::new(),
    };
    Ok(EvaluationReport {
        scenario: ev.scenario,
        feature_set: model.feature_set,
        personalized: model.personalized,
        pruned: active < total,
        fingerprint: model.fingerprint.clone(),
        persons: vec![person],
        mean: m,
        pooled: m,
        trajectories,
        warnings: diag.warnings().iter().map(|w| w.to_string()).collect(),
    })
}

/// `ablate`: the twelve-cell grid.
pub fn ablate(cfg: &PipelineConfig, ws: &Workspace) -> Result<PathBuf> {
    let table = read_features(cfg, ws)?;
    let ev = evaluation_config(cfg);
    let reports = harness::run_ablations(&table, &ev)?;
    write_reports(cfg, ws, &format!("ablation-{}", ev.scenario.name()), &stamp(reports, &cfg.fingerprint()))
}

/// Quadrant deviation heatmap of the scalar features of a table.
pub fn scalar_heatmap(table: &FeatureTable, diag: &mut Diagnostics) -> Result<Heatmap> {
    let names: Vec<String> = table.layout.scalars.iter().map(|s| s.name.clone()).collect();
    let rows: Vec<(Vec<f64>, EmotionLabel)> = table.rows.iter().map(|r| (r.bundle.scalars.clone(), r.label)).collect();
    feature_deviation_heatmap(&names, &rows, diag)
}

/// `heatmap`: CSV (and SVG) of the scalar-feature heatmap.
pub fn heatmap(cfg: &PipelineConfig, ws: &Workspace) -> Result<PathBuf> {
    let table = read_features(cfg, ws)?;
    let mut diag = Diagnostics::new();
    let h = scalar_heatmap(&table, &mut diag)?;
    log_warnings(&diag);
    let dir = ws.reports()?;
    let fp = cfg.fingerprint();
    let path = dir.join("heatmap.csv");
    write_text(&path, &stamp_csv(&fp, &h.to_csv()))?;
    if cfg.svg {
        let svg = h.to_svg().replacen("<svg ", &format!("<!-- fingerprint={fp} -->\n<svg "), 1);
        write_text(&dir.join("heatmap.svg"), &svg)?;
    }
    Ok(path)
}
