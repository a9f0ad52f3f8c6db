//! Turning predicted start times into feasible schedules.
//!
//! A prediction induces a total order of the tasks on every machine. Fixing
//! those orders turns the disjunctive problem into a plain precedence graph,
//! whose earliest-start schedule (longest paths from the source) is the
//! componentwise-smallest schedule respecting the orders and therefore also
//! makespan-optimal among them. When the induced orders contradict the job
//! sequences the graph has a cycle, and recovery falls back to a greedy
//! list-scheduling pass driven by the predicted starts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, TaskId};
use crate::schedule::{check_dims, check_feasible, Schedule, ScheduleKind};

/// Sort key used to order each machine's tasks from a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingKey {
    /// `(s + d) / 2`.
    #[default]
    HalfEnd,
    /// `s + d / 2`.
    Midpoint,
    /// `s`.
    Start,
}

impl OrderingKey {
    #[inline]
    pub fn value(self, start: f64, duration: f64) -> f64 {
        match self {
            OrderingKey::HalfEnd => (start + duration) / 2.0,
            OrderingKey::Midpoint => start + duration / 2.0,
            OrderingKey::Start => start,
        }
    }
}

impl std::str::FromStr for OrderingKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half_end" => Ok(OrderingKey::HalfEnd),
            "midpoint" => Ok(OrderingKey::Midpoint),
            "start" => Ok(OrderingKey::Start),
            other => Err(Error::InvalidArgument(format!("unknown ordering key `{other}`"))),
        }
    }
}

/// For every machine, the sequence in which its tasks are processed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineOrdering {
    sequences: Vec<Vec<TaskId>>,
}

impl MachineOrdering {
    /// Validates that `sequences[m]` is a permutation of the tasks on `m`.
    pub fn new(inst: &Instance, sequences: Vec<Vec<TaskId>>) -> Result<Self> {
        if sequences.len() != inst.num_machines() {
            return Err(Error::DimensionMismatch {
                expected: inst.num_machines(),
                actual: sequences.len(),
            });
        }
        for (m, seq) in sequences.iter().enumerate() {
            let mut sorted = seq.clone();
            sorted.sort_unstable();
            if sorted != inst.machine_tasks(m) {
                return Err(Error::InvalidArgument(format!(
                    "sequence for machine {m} is not a permutation of its tasks"
                )));
            }
        }
        Ok(Self { sequences })
    }

    pub(crate) fn new_unchecked(sequences: Vec<Vec<TaskId>>) -> Self {
        Self { sequences }
    }

    pub fn sequence(&self, m: usize) -> &[TaskId] {
        &self.sequences[m]
    }

    pub fn sequences(&self) -> &[Vec<TaskId>] {
        &self.sequences
    }

    pub fn into_sequences(self) -> Vec<Vec<TaskId>> {
        self.sequences
    }

    /// Machine orders realised by a feasible (or any) schedule, by start time.
    pub fn from_starts(inst: &Instance, starts: &[f64]) -> Self {
        extract_with(inst, starts, OrderingKey::Start)
    }
}

/// Orders each machine's tasks by `key`, breaking ties by task id (which is
/// job-major, so by job and then position).
pub fn extract_ordering(inst: &Instance, predicted: &[f64], key: OrderingKey) -> Result<MachineOrdering> {
    check_dims(inst, predicted.len())?;
    if let Some(i) = predicted.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("prediction {i} is not finite")));
    }
    Ok(extract_with(inst, predicted, key))
}

fn extract_with(inst: &Instance, predicted: &[f64], key: OrderingKey) -> MachineOrdering {
    let sequences = (0..inst.num_machines())
        .map(|m| {
            let mut tasks = inst.machine_tasks(m).to_vec();
            tasks.sort_by(|&a, &b| {
                let ka = key.value(predicted[a], f64::from(inst.duration(a)));
                let kb = key.value(predicted[b], f64::from(inst.duration(b)));
                ka.total_cmp(&kb).then(a.cmp(&b))
            });
            tasks
        })
        .collect();
    MachineOrdering::new_unchecked(sequences)
}

/// The machine orders contradict the job sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleDetected {
    /// Tasks along a directed cycle of the precedence graph, in arc order.
    pub cycle: Vec<TaskId>,
}

impl fmt::Display for CycleDetected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "machine ordering is cyclic through tasks {:?}", self.cycle)
    }
}

impl std::error::Error for CycleDetected {}

/// Earliest start times under the given machine orders: longest paths over
/// job arcs plus consecutive machine arcs, computed in topological order.
pub fn earliest_starts(inst: &Instance, ordering: &MachineOrdering) -> Result<Vec<u64>, CycleDetected> {
    let n = inst.num_tasks();
    let mut machine_pred = vec![usize::MAX; n];
    let mut machine_succ = vec![usize::MAX; n];
    for seq in ordering.sequences() {
        for w in seq.windows(2) {
            machine_succ[w[0]] = w[1];
            machine_pred[w[1]] = w[0];
        }
    }
    let mut indegree = vec![0u8; n];
    for v in 0..n {
        indegree[v] = u8::from(inst.job_predecessor(v).is_some()) + u8::from(machine_pred[v] != usize::MAX);
    }
    let mut stack: Vec<TaskId> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut start = vec![0u64; n];
    let mut done = 0;
    while let Some(v) = stack.pop() {
        done += 1;
        let finish = start[v] + u64::from(inst.duration(v));
        for w in [inst.job_successor(v), Some(machine_succ[v]).filter(|&w| w != usize::MAX)]
            .into_iter()
            .flatten()
        {
            start[w] = start[w].max(finish);
            indegree[w] -= 1;
            if indegree[w] == 0 {
                stack.push(w);
            }
        }
    }
    if done == n {
        return Ok(start);
    }
    // Every unprocessed task still has an unprocessed predecessor; walking
    // predecessors from any of them must revisit a task.
    let pending = |v: usize| indegree[v] > 0;
    let first = (0..n).find(|&v| pending(v)).expect("unfinished task exists");
    let mut seen = vec![usize::MAX; n];
    let mut walk = Vec::new();
    let mut v = first;
    while seen[v] == usize::MAX {
        seen[v] = walk.len();
        walk.push(v);
        v = inst
            .job_predecessor(v)
            .filter(|&p| pending(p))
            .or(Some(machine_pred[v]).filter(|&p| p != usize::MAX && pending(p)))
            .expect("pending task has a pending predecessor");
    }
    let mut cycle = walk[seen[v]..].to_vec();
    cycle.reverse();
    Err(CycleDetected { cycle })
}

/// Optimal schedule subject to fixed machine orders.
pub fn schedule_under_ordering(inst: &Instance, ordering: &MachineOrdering) -> Result<Schedule, CycleDetected> {
    earliest_starts(inst, ordering).map(|s| Schedule::from_integers(ScheduleKind::Recovered, &s))
}

/// Greedy list scheduling driven by predicted starts.
///
/// Repeatedly takes the unscheduled task at the head of its job with the
/// smallest current predicted start (ties to the lower job index), fixes it,
/// then pushes its job successor and every unscheduled same-machine task with
/// a later-or-equal prediction to no earlier than its completion. If the
/// resulting starts are non-negative integers and feasible they are returned
/// as is; otherwise the order in which tasks were fixed is re-timed with
/// [`earliest_starts`], which cannot cycle because that order is consistent
/// with every job sequence.
pub fn greedy_recover(inst: &Instance, predicted: &[f64]) -> Result<Schedule> {
    check_dims(inst, predicted.len())?;
    if let Some(i) = predicted.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("prediction {i} is not finite")));
    }
    let n = inst.num_tasks();
    let mut s = predicted.to_vec();
    let mut scheduled = vec![false; n];
    // Next unscheduled position per job.
    let mut frontier: Vec<usize> = vec![0; inst.num_jobs()];
    let mut sequences = vec![Vec::new(); inst.num_machines()];
    for _ in 0..n {
        let (job, task) = frontier
            .iter()
            .enumerate()
            .filter(|&(_, &t)| t < inst.tasks_per_job())
            .map(|(j, &t)| (j, inst.task(j, t)))
            .min_by(|a, b| s[a.1].total_cmp(&s[b.1]).then(a.0.cmp(&b.0)))
            .expect("an unscheduled task remains");
        scheduled[task] = true;
        frontier[job] += 1;
        let start = s[task];
        let finish = start + f64::from(inst.duration(task));
        let m = inst.machine(task);
        sequences[m].push(task);
        if let Some(next) = inst.job_successor(task) {
            s[next] = s[next].max(finish);
        }
        for &other in inst.machine_tasks(m) {
            if !scheduled[other] && s[other] >= start {
                s[other] = s[other].max(finish);
            }
        }
    }
    let direct = s.iter().all(|&v| v >= 0.0 && v.fract() == 0.0);
    if direct {
        let sched = Schedule::integral(ScheduleKind::Recovered, s)?;
        if check_feasible(inst, &sched)?.0 {
            return Ok(sched);
        }
    }
    let ordering = MachineOrdering::new_unchecked(sequences);
    let starts = earliest_starts(inst, &ordering)
        .expect("greedy order is consistent with job precedence");
    Ok(Schedule::from_integers(ScheduleKind::Recovered, &starts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryPath {
    Ordering,
    Greedy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryOutcome {
    pub schedule: Schedule,
    pub path: RecoveryPath,
}

/// Ordering extraction followed by the earliest-start schedule, falling back
/// to [`greedy_recover`] when the extracted ordering is cyclic.
pub fn recover(inst: &Instance, predicted: &[f64], key: OrderingKey) -> Result<RecoveryOutcome> {
    let ordering = extract_ordering(inst, predicted, key)?;
    match schedule_under_ordering(inst, &ordering) {
        Ok(schedule) => Ok(RecoveryOutcome {
            schedule,
            path: RecoveryPath::Ordering,
        }),
        Err(cycle) => {
            log::debug!("{cycle}; falling back to greedy recovery");
            Ok(RecoveryOutcome {
                schedule: greedy_recover(inst, predicted)?,
                path: RecoveryPath::Greedy,
            })
        }
    }
}
