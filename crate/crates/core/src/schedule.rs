use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::violation::{violation_degrees, ViolationReport};

/// Tolerance used when checking real-valued (predicted) schedules.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Predicted,
    Recovered,
    Exact,
    Heuristic,
}

impl ScheduleKind {
    /// Kinds that must hold non-negative integer start times.
    pub fn is_integral(self) -> bool {
        !matches!(self, ScheduleKind::Predicted)
    }
}

/// Start times for every task, flat in job-major order.
///
/// Predicted schedules hold arbitrary finite reals (negative values are
/// allowed until recovery); every other kind holds non-negative integers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    kind: ScheduleKind,
    starts: Vec<f64>,
}

impl Schedule {
    pub fn predicted(starts: Vec<f64>) -> Result<Self> {
        if let Some(i) = starts.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "predicted start {i} is not finite"
            )));
        }
        Ok(Self {
            kind: ScheduleKind::Predicted,
            starts,
        })
    }

    pub fn from_integers(kind: ScheduleKind, starts: &[u64]) -> Self {
        Self {
            kind,
            starts: starts.iter().map(|&s| s as f64).collect(),
        }
    }

    /// Wraps real start times under an integral kind, checking they are
    /// non-negative integers.
    pub fn integral(kind: ScheduleKind, starts: Vec<f64>) -> Result<Self> {
        if !kind.is_integral() {
            return Err(Error::InvalidArgument(format!("{kind:?} is not an integral kind")));
        }
        if let Some(i) = starts
            .iter()
            .position(|&s| !(s.is_finite() && s >= 0.0 && s.fract() == 0.0))
        {
            return Err(Error::InvalidArgument(format!(
                "start {i} = {} is not a non-negative integer",
                starts[i]
            )));
        }
        Ok(Self { kind, starts })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    pub fn into_starts(self) -> Vec<f64> {
        self.starts
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn is_integral(&self) -> bool {
        self.kind.is_integral()
    }

    /// Integer start times, or `None` for predicted schedules.
    pub fn integer_starts(&self) -> Option<Vec<u64>> {
        self.is_integral()
            .then(|| self.starts.iter().map(|&s| s as u64).collect())
    }

    /// Every start shifted by `offset`.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            kind: self.kind,
            starts: self.starts.iter().map(|s| s + offset).collect(),
        }
    }
}

pub(crate) fn check_dims(inst: &Instance, len: usize) -> Result<()> {
    if len != inst.num_tasks() {
        return Err(Error::DimensionMismatch {
            expected: inst.num_tasks(),
            actual: len,
        });
    }
    Ok(())
}

/// Completion time of the last task of every job, maximised over jobs.
/// Feasibility is not required.
pub fn makespan(inst: &Instance, sched: &Schedule) -> Result<f64> {
    check_dims(inst, sched.len())?;
    Ok(makespan_of(inst, &inst.durations_f64(), sched.starts()))
}

pub(crate) fn makespan_of(inst: &Instance, durations: &[f64], starts: &[f64]) -> f64 {
    (0..inst.num_jobs())
        .map(|j| {
            let last = inst.task(j, inst.tasks_per_job() - 1);
            starts[last] + durations[last]
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Integer makespan of integer start times.
pub fn makespan_int(inst: &Instance, starts: &[u64]) -> u64 {
    (0..inst.num_jobs())
        .map(|j| {
            let last = inst.task(j, inst.tasks_per_job() - 1);
            starts[last] + u64::from(inst.duration(last))
        })
        .max()
        .unwrap_or(0)
}

/// Checks the precedence and no-overlap constraints (and non-negativity).
///
/// Integral schedules must have every violation degree exactly zero; predicted
/// schedules are accepted up to [`FEASIBILITY_TOLERANCE`].
pub fn check_feasible(inst: &Instance, sched: &Schedule) -> Result<(bool, ViolationReport)> {
    let report = violation_degrees(inst, sched)?;
    let tol = if sched.is_integral() { 0.0 } else { FEASIBILITY_TOLERANCE };
    let nonneg = sched.starts().iter().all(|&s| s >= -tol);
    let ok = nonneg && report.max_degree() <= tol;
    Ok((ok, report))
}

/// Convenience wrapper for integer schedules.
pub fn is_feasible_int(inst: &Instance, starts: &[u64]) -> bool {
    let sched = Schedule::from_integers(ScheduleKind::Exact, starts);
    check_feasible(inst, &sched).map(|(ok, _)| ok).unwrap_or(false)
}
