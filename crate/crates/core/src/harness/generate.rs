//! Labeled datasets from a root instance: each sample slows down one machine
//! by a random factor and is labeled by the oracle.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::io::{instance_digest, Dataset, DatasetRecord, Slowdown, SolverStatus};
use crate::oracle::{enumerate_optimal, solve_anytime, solve_exact};
use crate::schedule::makespan_int;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlowdownPolicy {
    /// A machine drawn uniformly for every sample.
    #[default]
    PerSample,
    /// The same machine for every sample.
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Labeler {
    /// Branch-and-bound; records not proved within the limit are marked
    /// time-limited.
    #[default]
    Exact,
    /// Tabu search for the whole time limit.
    Anytime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub num_samples: usize,
    pub policy: SlowdownPolicy,
    pub factor_range: (f64, f64),
    /// Seconds per label.
    pub label_time_limit: f64,
    pub seed: u64,
    pub labeler: Labeler,
    /// Fail instead of storing time-limited labels.
    pub require_optimal: bool,
    /// Replace each exact label by the co-optimal schedule nearest to the
    /// previous one in slowdown order (exact labeler only).
    pub canonicalize: bool,
    /// Upper bound on co-optimal schedules enumerated per sample.
    pub max_co_optimal: usize,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            num_samples: 500,
            policy: SlowdownPolicy::PerSample,
            factor_range: (1.0, 1.5),
            label_time_limit: 10.0,
            seed: 0,
            labeler: Labeler::Exact,
            require_optimal: false,
            canonicalize: true,
            max_co_optimal: 64,
        }
    }
}

impl GenSpec {
    pub fn validate(&self, root: &Instance) -> Result<()> {
        let (lo, hi) = self.factor_range;
        if !(1.0..=1.5).contains(&lo) || !(1.0..=1.5).contains(&hi) || lo > hi {
            return Err(Error::InvalidArgument(format!(
                "slowdown factor range [{lo}, {hi}] must lie within [1.0, 1.5]"
            )));
        }
        if self.num_samples == 0 {
            return Err(Error::InvalidArgument("at least one sample is required".into()));
        }
        if !(self.label_time_limit > 0.0) || !self.label_time_limit.is_finite() {
            return Err(Error::InvalidArgument("label time limit must be positive".into()));
        }
        if let SlowdownPolicy::Fixed(m) = self.policy {
            if m >= root.num_machines() {
                return Err(Error::InvalidArgument(format!("machine {m} out of range")));
            }
        }
        Ok(())
    }
}

/// Scales every duration on `machine` by `factor`, rounding to the nearest
/// integer and keeping at least 1.
pub fn slow_down(root: &Instance, machine: usize, factor: f64) -> Vec<u32> {
    root.durations()
        .iter()
        .zip(root.machines())
        .map(|(&d, &m)| {
            if m == machine {
                ((f64::from(d) * factor).round() as u32).max(1)
            } else {
                d
            }
        })
        .collect()
}

/// The slowdown of sample `i`, independent of every other sample.
pub fn draw_slowdown(root: &Instance, spec: &GenSpec, i: usize) -> Slowdown {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(i as u64 + 1);
    let machine = match spec.policy {
        SlowdownPolicy::PerSample => rng.gen_range(0..root.num_machines()),
        SlowdownPolicy::Fixed(m) => m,
    };
    let (lo, hi) = spec.factor_range;
    let factor = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    Slowdown { machine, factor }
}

fn label(root: &Instance, spec: &GenSpec, i: usize) -> Result<DatasetRecord> {
    let slowdown = draw_slowdown(root, spec, i);
    let durations = slow_down(root, slowdown.machine, slowdown.factor);
    let inst = root.with_durations(&durations)?;
    let clock = Instant::now();
    let result = match spec.labeler {
        Labeler::Exact => solve_exact(&inst, spec.label_time_limit)?,
        Labeler::Anytime => solve_anytime(&inst, spec.label_time_limit, spec.seed ^ i as u64),
    };
    let solve_seconds = clock.elapsed().as_secs_f64();
    if spec.require_optimal && !result.proved_optimal {
        return Err(Error::InvalidRecord {
            record: i,
            reason: format!("optimality not proved within {} s", spec.label_time_limit),
        });
    }
    let label_starts = result.starts();
    Ok(DatasetRecord {
        label_makespan: makespan_int(&inst, &label_starts),
        label_starts,
        durations,
        solver_status: if result.proved_optimal {
            SolverStatus::ProvedOptimal
        } else {
            SolverStatus::TimeLimited
        },
        solve_seconds,
        slowdown: Some(slowdown),
    })
}

fn l1(a: &[u64], b: &[u64]) -> u64 {
    a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y)).sum()
}

/// Walks the samples in (machine, factor) order and swaps each proved label
/// for the co-optimal schedule closest in L1 to the previous sample's label.
fn canonicalize(root: &Instance, spec: &GenSpec, records: &mut [DatasetRecord]) -> Result<()> {
    let mut order: Vec<usize> = (0..records.len()).collect();
    let key = |r: &DatasetRecord| r.slowdown.map_or((0, 0.0), |s| (s.machine, s.factor));
    order.sort_by(|&a, &b| {
        let (ma, fa) = key(&records[a]);
        let (mb, fb) = key(&records[b]);
        ma.cmp(&mb).then(fa.total_cmp(&fb)).then(a.cmp(&b))
    });
    let budget = Duration::from_secs_f64(spec.label_time_limit);
    let choices: Vec<Vec<Vec<u64>>> = order
        .par_iter()
        .map(|&i| {
            let r = &records[i];
            if r.solver_status != SolverStatus::ProvedOptimal {
                return Ok(Vec::new());
            }
            let inst = root.with_durations(&r.durations)?;
            Ok(enumerate_optimal(&inst, r.label_makespan, spec.max_co_optimal, budget).0)
        })
        .collect::<Result<_>>()?;
    let mut previous: Option<Vec<u64>> = None;
    for (&i, options) in order.iter().zip(choices) {
        if let Some(prev) = &previous {
            if let Some(best) = options.into_iter().min_by_key(|s| l1(s, prev)) {
                if l1(&best, prev) < l1(&records[i].label_starts, prev) {
                    records[i].label_starts = best;
                }
            }
        }
        previous = Some(records[i].label_starts.clone());
    }
    Ok(())
}

pub fn generate_dataset(root: &Instance, spec: &GenSpec) -> Result<Dataset> {
    spec.validate(root)?;
    let mut records: Vec<DatasetRecord> = (0..spec.num_samples)
        .into_par_iter()
        .map(|i| label(root, spec, i))
        .collect::<Result<_>>()?;
    if spec.canonicalize && spec.labeler == Labeler::Exact {
        canonicalize(root, spec, &mut records)?;
    }
    let provenance = serde_json::json!({
        "generator": "slowdown",
        "root_sha256": instance_digest(root),
        "spec": spec,
    });
    let data = Dataset {
        root: root.clone(),
        provenance,
        records,
    };
    data.validate()?;
    Ok(data)
}
