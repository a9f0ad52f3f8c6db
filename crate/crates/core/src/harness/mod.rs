//! Dataset generation, evaluation metrics, timing and figure data.

mod figures;
mod generate;
mod metrics;
mod timing;

pub use figures::{write_anytime_curves, write_training_curve, write_violation_distribution};
pub use generate::{draw_slowdown, generate_dataset, slow_down, GenSpec, Labeler, SlowdownPolicy};
pub use metrics::{
    evaluate, evaluate_prediction, median, normalized_violation, optimality_gap, prediction_error, summarize,
    EvalOptions, MetricsReport, PathCounts, SampleEval, TtmOptions, TtmSummary,
};
pub use timing::{timing_report, TimingReport};
