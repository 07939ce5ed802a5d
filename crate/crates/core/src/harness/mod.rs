//! Evaluation protocol: trajectory-atomic splits, median trajectory
//! scores, metrics, baseline, ablation grid and quadrant classification.

pub mod classify;
pub mod experiment;
pub mod metrics;
pub mod report;
pub mod split;

pub use classify::{classify_quadrants, inverse_frequency_weights, ClassificationReport, ClassifyConfig};
pub use experiment::{
    ablation_cells, evaluate, run_ablations, run_baseline, run_cells, Cell, EvaluationConfig, EvaluationReport,
    PersonReport, TrajectoryPrediction,
};
pub use metrics::{error_rate, metrics, trajectory_score, DimensionMetrics, Metrics};
pub use split::{split_random, split_scenario_a, split_scenario_b, Scenario, Split};
