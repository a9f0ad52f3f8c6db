use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::io::{Dataset, ModelArtifact, SolverStatus};
use crate::oracle::time_to_match;
use crate::recovery::{recover, OrderingKey, RecoveryPath};
use crate::schedule::makespan_int;
use crate::violation::degrees_with;

/// Time-to-match settings: every evaluated sample is re-solved with the
/// anytime search once per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtmOptions {
    pub time_limit: Duration,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalOptions {
    pub key: OrderingKey,
    pub time_to_match: Option<TtmOptions>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEval {
    pub index: usize,
    pub prediction_error: f64,
    pub constraint_violation: f64,
    pub recovered_makespan: u64,
    pub reference_makespan: u64,
    pub optimality_gap: f64,
    pub path: RecoveryPath,
    /// Seconds per seed; `None` where the search timed out.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub time_to_match: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TtmSummary {
    /// Median seconds over all (sample, seed) runs, timeouts counted at the
    /// time limit.
    pub median_seconds: f64,
    pub timeouts: usize,
    pub runs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PathCounts {
    pub ordering: usize,
    pub greedy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub samples: usize,
    /// Mean per-task absolute start-time error before recovery.
    pub prediction_error: f64,
    /// Mean overlap degree per machine-sharing pair, as a fraction of the
    /// mean duration, before recovery.
    pub constraint_violation: f64,
    /// Mean relative makespan excess of the recovered schedule.
    pub optimality_gap: f64,
    pub time_to_match: Option<TtmSummary>,
    pub recovery_paths: PathCounts,
    /// What the gap is measured against.
    pub reference: String,
    pub per_sample: Vec<SampleEval>,
}

/// `(sum of overlap degrees / number of machine-sharing pairs) / mean duration`.
pub fn normalized_violation(inst: &Instance, predicted: &[f64]) -> f64 {
    let pairs = inst.overlap_pairs().len();
    if pairs == 0 {
        return 0.0;
    }
    let report = degrees_with(inst, &inst.durations_f64(), predicted);
    report.total_overlap() / pairs as f64 / inst.mean_duration()
}

pub fn optimality_gap(candidate: u64, reference: u64) -> f64 {
    (candidate as f64 - reference as f64) / reference as f64
}

pub fn prediction_error(predicted: &[f64], label: &[u64]) -> f64 {
    let total: f64 = predicted.iter().zip(label).map(|(p, &s)| (p - s as f64).abs()).sum();
    total / predicted.len().max(1) as f64
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

pub fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    Some(if k % 2 == 1 {
        xs[k / 2]
    } else {
        (xs[k / 2 - 1] + xs[k / 2]) / 2.0
    })
}

/// Scores one sample from its prediction.
pub fn evaluate_prediction(
    data: &Dataset,
    index: usize,
    predicted: &[f64],
    opts: &EvalOptions,
) -> Result<SampleEval> {
    let rec = &data.records[index];
    let inst = data.instance(index)?;
    let outcome = recover(&inst, predicted, opts.key)?;
    let starts = outcome.schedule.integer_starts().expect("recovered schedules are integral");
    let recovered = makespan_int(&inst, &starts);
    let time_to_match = match &opts.time_to_match {
        Some(t) => t
            .seeds
            .iter()
            .map(|&seed| time_to_match(&inst, recovered, t.time_limit, seed))
            .collect(),
        None => Vec::new(),
    };
    Ok(SampleEval {
        index,
        prediction_error: prediction_error(predicted, &rec.label_starts),
        constraint_violation: normalized_violation(&inst, predicted),
        recovered_makespan: recovered,
        reference_makespan: rec.label_makespan,
        optimality_gap: optimality_gap(recovered, rec.label_makespan),
        path: outcome.path,
        time_to_match,
    })
}

/// Aggregates per-sample scores.
pub fn summarize(data: &Dataset, per_sample: Vec<SampleEval>, opts: &EvalOptions) -> MetricsReport {
    let mut paths = PathCounts::default();
    for s in &per_sample {
        match s.path {
            RecoveryPath::Ordering => paths.ordering += 1,
            RecoveryPath::Greedy => paths.greedy += 1,
        }
    }
    let time_to_match = opts.time_to_match.as_ref().map(|t| {
        let limit = t.time_limit.as_secs_f64();
        let runs: Vec<Option<f64>> = per_sample.iter().flat_map(|s| s.time_to_match.iter().copied()).collect();
        TtmSummary {
            median_seconds: median(runs.iter().map(|r| r.unwrap_or(limit)).collect()).unwrap_or(0.0),
            timeouts: runs.iter().filter(|r| r.is_none()).count(),
            runs: runs.len(),
        }
    });
    let all_proved = per_sample
        .iter()
        .all(|s| data.records[s.index].solver_status == SolverStatus::ProvedOptimal);
    let reference = if all_proved {
        "proved optimum of the exact oracle".to_string()
    } else {
        "exact optimum where proved, otherwise the oracle's time-limited incumbent".to_string()
    };
    MetricsReport {
        samples: per_sample.len(),
        prediction_error: mean(per_sample.iter().map(|s| s.prediction_error)),
        constraint_violation: mean(per_sample.iter().map(|s| s.constraint_violation)),
        optimality_gap: mean(per_sample.iter().map(|s| s.optimality_gap)),
        time_to_match,
        recovery_paths: paths,
        reference,
        per_sample,
    }
}

/// Scores `artifact` on the records `indices`, which must not overlap the
/// model's training indices.
pub fn evaluate(artifact: &ModelArtifact, data: &Dataset, indices: &[usize], opts: &EvalOptions) -> Result<MetricsReport> {
    if let Some(meta) = &artifact.training {
        if let Some(&i) = indices.iter().find(|i| meta.train_indices.contains(i)) {
            return Err(Error::SplitLeakage(i));
        }
    }
    if artifact.model.network.num_inputs() != data.root.num_tasks() {
        return Err(Error::DimensionMismatch {
            expected: data.root.num_tasks(),
            actual: artifact.model.network.num_inputs(),
        });
    }
    let mut per_sample = Vec::with_capacity(indices.len());
    for &i in indices {
        if i >= data.len() {
            return Err(Error::InvalidArgument(format!("sample {i} out of range")));
        }
        let predicted = artifact.model.predict(&data.records[i].durations)?;
        per_sample.push(evaluate_prediction(data, i, &predicted, opts)?);
    }
    Ok(summarize(data, per_sample, opts))
}
