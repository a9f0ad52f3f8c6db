//! Grid search over architecture, loss, learning rate and multiplier step,
//! each configuration trained once per seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{evaluate, EvalOptions, MetricsReport};
use crate::io::{Dataset, ModelArtifact};
use crate::neural::ArchitectureKind;

use super::{train, EpochLog, LossKind, TrainConfig, ALPHA_RANGE, RHO_RANGE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub architectures: Vec<ArchitectureKind>,
    pub losses: Vec<LossKind>,
    pub alphas: Vec<f64>,
    /// Only used by the Lagrangian loss; MSE configurations are not
    /// repeated per value.
    pub rhos: Vec<f64>,
    /// Batch size, epochs and the remaining settings.
    pub base: TrainConfig,
}

impl GridSpec {
    /// `n` evenly spaced values from `lo` to `hi` inclusive.
    pub fn evenly_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let within = |v: f64, (lo, hi): (f64, f64)| v >= lo * (1.0 - 1e-12) && v <= hi * (1.0 + 1e-12);
        if let Some(a) = self.alphas.iter().find(|&&a| !within(a, ALPHA_RANGE)) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {a} outside [{}, {}]",
                ALPHA_RANGE.0, ALPHA_RANGE.1
            )));
        }
        if self.losses.contains(&LossKind::Lagrangian) {
            if let Some(r) = self.rhos.iter().find(|&&r| !within(r, RHO_RANGE)) {
                return Err(Error::InvalidArgument(format!(
                    "multiplier step {r} outside [{}, {}]",
                    RHO_RANGE.0, RHO_RANGE.1
                )));
            }
            if self.rhos.is_empty() {
                return Err(Error::InvalidArgument("no multiplier steps for the Lagrangian loss".into()));
            }
        }
        if self.architectures.is_empty() || self.losses.is_empty() || self.alphas.is_empty() {
            return Err(Error::InvalidArgument("empty grid".into()));
        }
        self.base.validate()
    }

    /// Every configuration in the grid, seed left at the base value.
    pub fn configs(&self) -> Vec<TrainConfig> {
        let mut out = Vec::new();
        for &architecture in &self.architectures {
            for &loss in &self.losses {
                for &alpha in &self.alphas {
                    let rhos: &[f64] = match loss {
                        LossKind::Mse => &[0.0],
                        LossKind::Lagrangian => &self.rhos,
                    };
                    for &rho in rhos {
                        out.push(TrainConfig {
                            architecture,
                            loss,
                            alpha,
                            rho,
                            ..self.base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub config_index: usize,
    /// Configuration with this cell's seed.
    pub config: TrainConfig,
    pub metrics: MetricsReport,
    pub final_epoch: Option<EpochLog>,
    pub artifact: ModelArtifact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub config: TrainConfig,
    pub seeds: usize,
    pub mean_gap: f64,
    pub mean_violation: f64,
    pub mean_prediction_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub configs: Vec<ConfigSummary>,
    pub cells: Vec<CellResult>,
    /// Index into `configs` of the lowest mean validation gap.
    pub best: usize,
}

impl SearchResult {
    /// Lowest mean gap among configurations accepted by `filter` (ties to
    /// the first).
    pub fn best_where(&self, filter: impl Fn(&TrainConfig) -> bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, c) in self.configs.iter().enumerate() {
            if filter(&c.config) && best.is_none_or(|b| c.mean_gap < self.configs[b].mean_gap) {
                best = Some(i);
            }
        }
        best
    }

    pub fn cells_of(&self, config_index: usize) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(move |c| c.config_index == config_index)
    }
}

/// Trains every (configuration, seed) cell on `train_idx` and scores it on
/// `val_idx`. Cells run in parallel; results are ordered by configuration,
/// then seed.
pub fn hyperparameter_search(
    data: &Dataset,
    train_idx: &[usize],
    val_idx: &[usize],
    grid: &GridSpec,
    seeds: &[u64],
    eval: &EvalOptions,
) -> Result<SearchResult> {
    grid.validate()?;
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds".into()));
    }
    if val_idx.is_empty() {
        return Err(Error::InvalidArgument("validation split is empty".into()));
    }
    let configs = grid.configs();
    let jobs: Vec<(usize, TrainConfig)> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, c)| seeds.iter().map(move |&seed| (i, TrainConfig { seed, ..c.clone() })))
        .collect();
    let cells: Vec<CellResult> = jobs
        .into_par_iter()
        .map(|(config_index, config)| {
            let outcome = train(data, train_idx, &[], &config)?;
            let metrics = evaluate(&outcome.artifact, data, val_idx, eval)?;
            log::info!(
                "{} {} alpha={} rho={} seed={}: gap {:.4} violation {:.4}",
                config.architecture,
                config.loss,
                config.alpha,
                config.effective_rho(),
                config.seed,
                metrics.optimality_gap,
                metrics.constraint_violation
            );
            Ok(CellResult {
                config_index,
                final_epoch: outcome.log.last().cloned(),
                config,
                metrics,
                artifact: outcome.artifact,
            })
        })
        .collect::<Result<_>>()?;
    let summaries: Vec<ConfigSummary> = configs
        .into_iter()
        .enumerate()
        .map(|(i, config)| {
            let own: Vec<&CellResult> = cells.iter().filter(|c| c.config_index == i).collect();
            let k = own.len() as f64;
            ConfigSummary {
                config,
                seeds: own.len(),
                mean_gap: own.iter().map(|c| c.metrics.optimality_gap).sum::<f64>() / k,
                mean_violation: own.iter().map(|c| c.metrics.constraint_violation).sum::<f64>() / k,
                mean_prediction_error: own.iter().map(|c| c.metrics.prediction_error).sum::<f64>() / k,
            }
        })
        .collect();
    let mut result = SearchResult {
        configs: summaries,
        cells,
        best: 0,
    };
    result.best = result.best_where(|_| true).unwrap_or(0);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evenly_spaced_endpoints() {
        let v = GridSpec::evenly_spaced(0.000125, 0.002, 4);
        assert_eq!(v.len(), 4);
        assert_eq!(v[0], 0.000125);
        assert!((v[3] - 0.002).abs() < 1e-15);
    }

    #[test]
    fn grid_ranges_enforced() {
        let grid = GridSpec {
            architectures: vec![ArchitectureKind::Jm],
            losses: vec![LossKind::Lagrangian],
            alphas: vec![0.01],
            rhos: vec![0.01],
            base: TrainConfig::default(),
        };
        assert!(grid.validate().is_err());
        let ok = GridSpec {
            alphas: vec![0.001],
            ..grid.clone()
        };
        assert!(ok.validate().is_ok());
        let bad_rho = GridSpec { rhos: vec![0.5], ..ok };
        assert!(bad_rho.validate().is_err());
    }

    #[test]
    fn mse_not_repeated_per_rho() {
        let grid = GridSpec {
            architectures: vec![ArchitectureKind::Fc],
            losses: vec![LossKind::Mse, LossKind::Lagrangian],
            alphas: vec![0.001, 0.002],
            rhos: vec![0.01, 0.02, 0.05],
            base: TrainConfig::default(),
        };
        assert_eq!(grid.configs().len(), 2 + 6);
    }
}
