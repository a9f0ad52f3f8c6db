use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::Dataset;
use crate::recovery::{extract_ordering, schedule_under_ordering, OrderingKey};
use crate::training::{train_observed, TrainConfig};

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub epochs: usize,
    /// Mean time of one training epoch.
    pub one_epoch_seconds: f64,
    pub total_training_seconds: f64,
    /// Mean time to predict one sample.
    pub inference_seconds: f64,
    /// Mean time of ordering extraction plus the earliest-start schedule.
    pub recovery_seconds: f64,
    pub samples: usize,
}

/// Trains with `config` on `train_idx`, then times inference and recovery on
/// `eval_idx` with the resulting model.
pub fn timing_report(
    data: &Dataset,
    train_idx: &[usize],
    eval_idx: &[usize],
    config: &TrainConfig,
    key: OrderingKey,
) -> Result<TimingReport> {
    if eval_idx.is_empty() {
        return Err(Error::InvalidArgument("no samples to time".into()));
    }
    let clock = Instant::now();
    let outcome = train_observed(data, train_idx, &[], config, |_, _| {})?;
    let total = clock.elapsed().as_secs_f64();
    let model = &outcome.artifact.model;

    let mut predictions = Vec::with_capacity(eval_idx.len());
    let clock = Instant::now();
    for &i in eval_idx {
        predictions.push(model.predict(&data.records[i].durations)?);
    }
    let inference = clock.elapsed().as_secs_f64() / eval_idx.len() as f64;

    let instances: Vec<_> = eval_idx.iter().map(|&i| data.instance(i)).collect::<Result<_>>()?;
    let clock = Instant::now();
    for (inst, pred) in instances.iter().zip(&predictions) {
        let ordering = extract_ordering(inst, pred, key)?;
        // A cyclic ordering still counts: the time spent detecting it is
        // part of the ordering path.
        let _ = schedule_under_ordering(inst, &ordering);
    }
    let recovery = clock.elapsed().as_secs_f64() / eval_idx.len() as f64;

    Ok(TimingReport {
        epochs: config.epochs,
        one_epoch_seconds: total / config.epochs.max(1) as f64,
        total_training_seconds: total,
        inference_seconds: inference,
        recovery_seconds: recovery,
        samples: eval_idx.len(),
    })
}
