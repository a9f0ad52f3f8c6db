//! Lagrangian-dual training: SGD on the primal loss for a fixed multiplier
//! vector, then a subgradient ascent step on the multipliers using the
//! violations of the epoch-final network, with the network warm-started
//! across epochs.

mod search;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::io::{Dataset, ModelArtifact};
use crate::neural::{
    loss_and_grad, Architecture, ArchitectureKind, JmDepths, Model, Network, ScaledSample, Scaler,
};
use crate::violation::{degrees_with, Multipliers, ViolationReport};

pub use search::{hyperparameter_search, CellResult, ConfigSummary, GridSpec, SearchResult};

/// Learning-rate range searched over.
pub const ALPHA_RANGE: (f64, f64) = (0.000125, 0.002);
/// Multiplier step-size range searched over.
pub const RHO_RANGE: (f64, f64) = (0.001, 0.05);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    Lagrangian,
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::Mse => "mse",
            LossKind::Lagrangian => "lagrangian",
        })
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(LossKind::Mse),
            "lagrangian" => Ok(LossKind::Lagrangian),
            other => Err(Error::InvalidArgument(format!("unknown loss `{other}`"))),
        }
    }
}

/// Which samples feed the multiplier update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualAggregation {
    /// Mean violation over the whole training set after the epoch.
    #[default]
    EpochMean,
    /// Mean violation over the epoch's last minibatch.
    LastBatch,
}

/// Whether each constraint has its own multiplier or each class shares one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierGranularity {
    #[default]
    Constraint,
    Class,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub rho: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub architecture: ArchitectureKind,
    pub depths: JmDepths,
    pub loss: LossKind,
    pub dual_aggregation: DualAggregation,
    pub granularity: MultiplierGranularity,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.002,
            rho: 0.05,
            batch_size: 8,
            epochs: 500,
            seed: 0,
            architecture: ArchitectureKind::Jm,
            depths: JmDepths::default(),
            loss: LossKind::Lagrangian,
            dual_aggregation: DualAggregation::EpochMean,
            granularity: MultiplierGranularity::Constraint,
        }
    }
}

impl TrainConfig {
    /// The multiplier step actually used: zero under the MSE loss.
    pub fn effective_rho(&self) -> f64 {
        match self.loss {
            LossKind::Mse => 0.0,
            LossKind::Lagrangian => self.rho,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {}", self.alpha)));
        }
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidArgument(format!("multiplier step must be non-negative, got {}", self.rho)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn architecture_for(&self, inst: &Instance) -> Architecture {
        match self.architecture {
            ArchitectureKind::Jm => Architecture::jm(inst, self.depths),
            ArchitectureKind::Fc => Architecture::fc_for(inst, self.depths),
        }
    }
}

/// Multipliers, their step size and the number of updates applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub multipliers: Multipliers,
    pub rho: f64,
    pub epoch: usize,
}

impl DualState {
    pub fn new(inst: &Instance, rho: f64) -> Self {
        Self {
            multipliers: Multipliers::zeros(inst),
            rho,
            epoch: 0,
        }
    }

    /// `lambda_c += rho * nu_c` for every constraint. With `rho == 0` the
    /// multipliers are left untouched.
    pub fn update(&mut self, violation: &ViolationReport, granularity: MultiplierGranularity) {
        self.epoch += 1;
        if self.rho == 0.0 {
            return;
        }
        let step = |lambda: &mut [f64], nu: &[f64]| match granularity {
            MultiplierGranularity::Constraint => {
                for (l, v) in lambda.iter_mut().zip(nu) {
                    *l += self.rho * v;
                }
            }
            MultiplierGranularity::Class => {
                let mean = if nu.is_empty() { 0.0 } else { nu.iter().sum::<f64>() / nu.len() as f64 };
                for l in lambda.iter_mut() {
                    *l += self.rho * mean;
                }
            }
        };
        step(&mut self.multipliers.precedence, &violation.precedence);
        step(&mut self.multipliers.overlap, &violation.overlap);
    }
}

/// Provenance stored with a trained model. The loss tag is implied by `rho`
/// (zero for MSE training).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub alpha: f64,
    pub rho: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub dual_aggregation: DualAggregation,
    pub granularity: MultiplierGranularity,
    pub train_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean minibatch loss over the epoch.
    pub train_loss: f64,
    /// Mean precedence violation, in time units, of the epoch-final network
    /// over the training set.
    pub mean_precedence_violation: f64,
    /// Mean overlap violation, in time units.
    pub mean_overlap_violation: f64,
    /// Mean absolute start-time error on the validation samples.
    pub validation_error: Option<f64>,
    pub mean_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub artifact: ModelArtifact,
    pub log: Vec<EpochLog>,
    pub dual: DualState,
}

/// Seeded disjoint split: `round(train_fraction * n)` training indices and
/// the rest for evaluation, both sorted.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let k = ((n as f64) * train_fraction.clamp(0.0, 1.0)).round() as usize;
    let mut train = idx[..k].to_vec();
    let mut test = idx[k..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Mean violation per constraint of `net` over `samples`, in output units.
pub fn mean_violation(net: &Network, inst: &Instance, samples: &[&ScaledSample]) -> Result<ViolationReport> {
    let mut acc = ViolationReport {
        precedence: vec![0.0; inst.num_precedences()],
        overlap: vec![0.0; inst.overlap_pairs().len()],
    };
    if samples.is_empty() {
        return Ok(acc);
    }
    for s in samples {
        let out = net.forward(&s.input)?;
        let r = degrees_with(inst, &s.durations, &out);
        for (a, v) in acc.precedence.iter_mut().zip(&r.precedence) {
            *a += v;
        }
        for (a, v) in acc.overlap.iter_mut().zip(&r.overlap) {
            *a += v;
        }
    }
    let k = samples.len() as f64;
    acc.precedence.iter_mut().for_each(|v| *v /= k);
    acc.overlap.iter_mut().for_each(|v| *v /= k);
    Ok(acc)
}

pub fn train(data: &Dataset, train_idx: &[usize], val_idx: &[usize], config: &TrainConfig) -> Result<TrainOutcome> {
    train_observed(data, train_idx, val_idx, config, |_, _| {})
}

/// [`train`], calling `observer` after every multiplier update.
pub fn train_observed(
    data: &Dataset,
    train_idx: &[usize],
    val_idx: &[usize],
    config: &TrainConfig,
    mut observer: impl FnMut(&EpochLog, &DualState),
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_idx.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    if let Some(&i) = train_idx.iter().chain(val_idx).find(|&&i| i >= data.len()) {
        return Err(Error::InvalidArgument(format!("sample {i} out of range")));
    }
    if let Some(&i) = val_idx.iter().find(|i| train_idx.contains(i)) {
        return Err(Error::SplitLeakage(i));
    }
    let inst = &data.root;
    let scaler = Scaler::fit(
        train_idx.iter().map(|&i| data.records[i].durations.as_slice()),
        train_idx.iter().map(|&i| data.records[i].label_makespan),
    )?;
    let prepare = |i: &usize| {
        let r = &data.records[*i];
        ScaledSample::new(&scaler, &r.durations, &r.label_starts)
    };
    let train_set: Vec<ScaledSample> = train_idx.iter().map(prepare).collect();
    let val_set: Vec<ScaledSample> = val_idx.iter().map(prepare).collect();
    let all: Vec<&ScaledSample> = train_set.iter().collect();

    let mut net = Network::init(config.architecture_for(inst), config.seed)?;
    let mut dual = DualState::new(inst, config.effective_rho());
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        let mut last_batch: &[usize] = &[];
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&ScaledSample> = chunk.iter().map(|&k| &train_set[k]).collect();
            let (terms, grad) = loss_and_grad(&net, inst, &batch, &dual.multipliers).map_err(|e| match e {
                Error::NonFiniteLoss { sample, .. } => Error::Diverged {
                    epoch,
                    sample: train_idx[chunk[sample]],
                },
                other => other,
            })?;
            net.sgd_step(&grad, config.alpha).map_err(|e| match e {
                Error::NonFiniteGradient { .. } => Error::Diverged {
                    epoch,
                    sample: train_idx[chunk[0]],
                },
                other => other,
            })?;
            loss_sum += terms.total();
            batches += 1;
            last_batch = chunk;
        }
        let violation = mean_violation(&net, inst, &all)?;
        let dual_signal = match config.dual_aggregation {
            DualAggregation::EpochMean => violation.clone(),
            DualAggregation::LastBatch => {
                let batch: Vec<&ScaledSample> = last_batch.iter().map(|&k| &train_set[k]).collect();
                mean_violation(&net, inst, &batch)?
            }
        };
        dual.update(&dual_signal, config.granularity);
        let validation_error = if val_set.is_empty() {
            None
        } else {
            let mut err = 0.0;
            for s in &val_set {
                let out = net.forward(&s.input)?;
                let e: f64 = out.iter().zip(&s.target).map(|(y, t)| (y - t).abs()).sum();
                err += e / out.len() as f64;
            }
            Some(err / val_set.len() as f64 * scaler.output_divisor)
        };
        let entry = EpochLog {
            epoch: epoch + 1,
            train_loss: loss_sum / batches.max(1) as f64,
            mean_precedence_violation: violation.mean_precedence() * scaler.output_divisor,
            mean_overlap_violation: violation.mean_overlap() * scaler.output_divisor,
            validation_error,
            mean_multiplier: if dual.multipliers.is_empty() {
                0.0
            } else {
                dual.multipliers.iter().sum::<f64>() / dual.multipliers.len() as f64
            },
        };
        observer(&entry, &dual);
        log::debug!(
            "epoch {}: loss {:.6} overlap {:.4}",
            entry.epoch,
            entry.train_loss,
            entry.mean_overlap_violation
        );
        log.push(entry);
    }

    let meta = TrainingMeta {
        seed: config.seed,
        alpha: config.alpha,
        rho: config.effective_rho(),
        epochs: config.epochs,
        batch_size: config.batch_size,
        dual_aggregation: config.dual_aggregation,
        granularity: config.granularity,
        train_indices: train_idx.to_vec(),
    };
    Ok(TrainOutcome {
        artifact: ModelArtifact {
            model: Model { network: net, scaler },
            multipliers: dual.multipliers.clone(),
            training: Some(meta),
        },
        log,
        dual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::two_by_two;
    use crate::io::{DatasetRecord, SolverStatus};

    fn tiny_dataset() -> Dataset {
        let mut data = Dataset::new(two_by_two());
        for (d, s, mk) in [
            (vec![3, 2, 2, 4], vec![0, 3, 0, 3], 7),
            (vec![3, 3, 2, 4], vec![0, 3, 0, 3], 7),
            (vec![4, 2, 2, 4], vec![0, 4, 0, 4], 8),
            (vec![3, 2, 2, 5], vec![0, 3, 0, 3], 8),
        ] {
            data.records.push(DatasetRecord {
                durations: d,
                label_starts: s,
                label_makespan: mk,
                solver_status: SolverStatus::ProvedOptimal,
                solve_seconds: 0.0,
                slowdown: None,
            });
        }
        data
    }

    fn config() -> TrainConfig {
        TrainConfig {
            epochs: 20,
            batch_size: 2,
            seed: 4,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn split_is_disjoint_and_seeded() {
        let (a, b) = split_indices(50, 0.8, 1);
        assert_eq!((a.len(), b.len()), (40, 10));
        assert!(a.iter().all(|i| !b.contains(i)));
        assert_eq!(split_indices(50, 0.8, 1), (a.clone(), b));
        assert_ne!(split_indices(50, 0.8, 2).0, a);
    }

    #[test]
    fn rho_zero_matches_mse() {
        let data = tiny_dataset();
        let mse = TrainConfig {
            loss: LossKind::Mse,
            ..config()
        };
        let zero = TrainConfig { rho: 0.0, ..config() };
        let a = train(&data, &[0, 1, 2], &[3], &mse).unwrap();
        let b = train(&data, &[0, 1, 2], &[3], &zero).unwrap();
        assert_eq!(a.artifact, b.artifact);
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn multipliers_never_decrease() {
        let data = tiny_dataset();
        let mut prev: Option<Multipliers> = None;
        train_observed(&data, &[0, 1, 2, 3], &[], &config(), |_, dual| {
            if let Some(p) = &prev {
                assert!(p.iter().zip(dual.multipliers.iter()).all(|(a, b)| b >= a));
            }
            prev = Some(dual.multipliers.clone());
        })
        .unwrap();
    }

    #[test]
    fn leakage_rejected() {
        let data = tiny_dataset();
        assert!(matches!(
            train(&data, &[0, 1], &[1], &config()),
            Err(Error::SplitLeakage(1))
        ));
    }

    #[test]
    fn training_is_reproducible() {
        let data = tiny_dataset();
        let a = train(&data, &[0, 1, 2], &[3], &config()).unwrap();
        let b = train(&data, &[0, 1, 2], &[3], &config()).unwrap();
        assert_eq!(a.artifact, b.artifact);
    }

    #[test]
    fn divergence_reports_epoch() {
        let data = tiny_dataset();
        let cfg = TrainConfig {
            alpha: 1e6,
            epochs: 50,
            ..config()
        };
        assert!(matches!(train(&data, &[0, 1, 2, 3], &[], &cfg), Err(Error::Diverged { .. })));
    }
}
