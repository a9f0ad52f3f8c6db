//! The job shop problem instance.
//!
//! Tasks are addressed by a flat [`TaskId`] in job-major order, so task `t`
//! of job `j` is `j * tasks_per_job + t`. Every per-task vector in the crate
//! (durations, start times, predictions, gradients) uses this layout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flat task index, `job * tasks_per_job + position`.
pub type TaskId = usize;

/// A job shop instance: machine assignment and integer processing times for
/// `num_jobs` jobs of `tasks_per_job` tasks each.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct Instance {
    num_jobs: usize,
    num_machines: usize,
    tasks_per_job: usize,
    machine: Vec<usize>,
    duration: Vec<u32>,
    // Derived from `machine`, rebuilt on construction.
    machine_tasks: Vec<Vec<TaskId>>,
    overlap_pairs: Vec<(TaskId, TaskId)>,
}

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    jobs: usize,
    machines: usize,
    /// One row per job of `(machine, duration)` pairs.
    tasks: Vec<Vec<(usize, u32)>>,
}

impl TryFrom<InstanceRepr> for Instance {
    type Error = Error;

    fn try_from(repr: InstanceRepr) -> Result<Self> {
        if repr.tasks.len() != repr.jobs {
            return Err(Error::InvalidInstance(format!(
                "declared {} jobs but found {}",
                repr.jobs,
                repr.tasks.len()
            )));
        }
        let (machine, duration) = repr
            .tasks
            .into_iter()
            .map(|row| row.into_iter().unzip())
            .unzip();
        Instance::new(repr.machines, machine, duration)
    }
}

impl From<Instance> for InstanceRepr {
    fn from(inst: Instance) -> Self {
        let tasks = (0..inst.num_jobs)
            .map(|j| {
                (0..inst.tasks_per_job)
                    .map(|t| {
                        let id = inst.task(j, t);
                        (inst.machine[id], inst.duration[id])
                    })
                    .collect()
            })
            .collect();
        InstanceRepr {
            jobs: inst.num_jobs,
            machines: inst.num_machines,
            tasks,
        }
    }
}

impl Instance {
    /// Builds an instance from per-job rows of machine indices and durations.
    ///
    /// All jobs must have the same number of tasks. When every job has exactly
    /// one task per machine (`tasks_per_job == num_machines`) the machines of a
    /// job must be pairwise distinct.
    pub fn new(num_machines: usize, machine: Vec<Vec<usize>>, duration: Vec<Vec<u32>>) -> Result<Self> {
        let num_jobs = machine.len();
        if num_jobs == 0 {
            return Err(Error::InvalidInstance("at least one job is required".into()));
        }
        if num_machines == 0 {
            return Err(Error::InvalidInstance("at least one machine is required".into()));
        }
        if duration.len() != num_jobs {
            return Err(Error::InvalidInstance(format!(
                "{} machine rows but {} duration rows",
                num_jobs,
                duration.len()
            )));
        }
        let tasks_per_job = machine[0].len();
        if tasks_per_job == 0 {
            return Err(Error::InvalidInstance("jobs must have at least one task".into()));
        }
        for (j, (ms, ds)) in machine.iter().zip(&duration).enumerate() {
            if ms.len() != tasks_per_job || ds.len() != tasks_per_job {
                return Err(Error::InvalidInstance(format!(
                    "job {j} has {} machines and {} durations, expected {tasks_per_job}",
                    ms.len(),
                    ds.len()
                )));
            }
            for (t, (&m, &d)) in ms.iter().zip(ds).enumerate() {
                if m >= num_machines {
                    return Err(Error::InvalidInstance(format!(
                        "task ({j},{t}) uses machine {m}, but only {num_machines} machines exist"
                    )));
                }
                if d < 1 {
                    return Err(Error::InvalidInstance(format!(
                        "task ({j},{t}) has duration {d}; durations must be at least 1"
                    )));
                }
            }
            if tasks_per_job == num_machines {
                let mut seen = vec![false; num_machines];
                for &m in ms {
                    if std::mem::replace(&mut seen[m], true) {
                        return Err(Error::InvalidInstance(format!(
                            "job {j} visits machine {m} twice"
                        )));
                    }
                }
            }
        }
        let machine: Vec<usize> = machine.into_iter().flatten().collect();
        let duration: Vec<u32> = duration.into_iter().flatten().collect();
        Ok(Self::assemble(num_jobs, num_machines, tasks_per_job, machine, duration))
    }

    fn assemble(
        num_jobs: usize,
        num_machines: usize,
        tasks_per_job: usize,
        machine: Vec<usize>,
        duration: Vec<u32>,
    ) -> Self {
        let mut machine_tasks = vec![Vec::new(); num_machines];
        for (id, &m) in machine.iter().enumerate() {
            machine_tasks[m].push(id);
        }
        let mut overlap_pairs = Vec::new();
        for tasks in &machine_tasks {
            for (i, &a) in tasks.iter().enumerate() {
                for &b in &tasks[i + 1..] {
                    if a / tasks_per_job != b / tasks_per_job {
                        overlap_pairs.push((a, b));
                    }
                }
            }
        }
        overlap_pairs.sort_unstable();
        Self {
            num_jobs,
            num_machines,
            tasks_per_job,
            machine,
            duration,
            machine_tasks,
            overlap_pairs,
        }
    }

    /// Same machine assignment with new durations (flat, job-major).
    pub fn with_durations(&self, durations: &[u32]) -> Result<Self> {
        if durations.len() != self.num_tasks() {
            return Err(Error::DimensionMismatch {
                expected: self.num_tasks(),
                actual: durations.len(),
            });
        }
        if let Some(pos) = durations.iter().position(|&d| d < 1) {
            return Err(Error::InvalidInstance(format!(
                "task {pos} has duration 0; durations must be at least 1"
            )));
        }
        let mut out = self.clone();
        out.duration.copy_from_slice(durations);
        Ok(out)
    }

    pub fn num_jobs(&self) -> usize {
        self.num_jobs
    }

    pub fn num_machines(&self) -> usize {
        self.num_machines
    }

    pub fn tasks_per_job(&self) -> usize {
        self.tasks_per_job
    }

    pub fn num_tasks(&self) -> usize {
        self.num_jobs * self.tasks_per_job
    }

    #[inline]
    pub fn task(&self, job: usize, position: usize) -> TaskId {
        job * self.tasks_per_job + position
    }

    #[inline]
    pub fn job_of(&self, task: TaskId) -> usize {
        task / self.tasks_per_job
    }

    #[inline]
    pub fn position_of(&self, task: TaskId) -> usize {
        task % self.tasks_per_job
    }

    #[inline]
    pub fn machine(&self, task: TaskId) -> usize {
        self.machine[task]
    }

    #[inline]
    pub fn duration(&self, task: TaskId) -> u32 {
        self.duration[task]
    }

    pub fn machines(&self) -> &[usize] {
        &self.machine
    }

    pub fn durations(&self) -> &[u32] {
        &self.duration
    }

    pub fn durations_f64(&self) -> Vec<f64> {
        self.duration.iter().map(|&d| f64::from(d)).collect()
    }

    /// Job successor of a task, if it is not the last of its job.
    #[inline]
    pub fn job_successor(&self, task: TaskId) -> Option<TaskId> {
        (self.position_of(task) + 1 < self.tasks_per_job).then_some(task + 1)
    }

    #[inline]
    pub fn job_predecessor(&self, task: TaskId) -> Option<TaskId> {
        (self.position_of(task) > 0).then(|| task - 1)
    }

    /// Tasks processed on machine `m`, in increasing task id.
    pub fn machine_tasks(&self, m: usize) -> &[TaskId] {
        &self.machine_tasks[m]
    }

    /// Unordered pairs `(a, b)`, `a < b`, of tasks from different jobs sharing
    /// a machine. These index the no-overlap constraints.
    pub fn overlap_pairs(&self) -> &[(TaskId, TaskId)] {
        &self.overlap_pairs
    }

    /// Number of task precedence constraints, `num_jobs * (tasks_per_job - 1)`.
    pub fn num_precedences(&self) -> usize {
        self.num_jobs * (self.tasks_per_job - 1)
    }

    /// Index of the precedence constraint between task `t` and `t + 1` of job `j`.
    #[inline]
    pub fn precedence_index(&self, job: usize, position: usize) -> usize {
        job * (self.tasks_per_job - 1) + position
    }

    pub fn total_work(&self) -> u64 {
        self.duration.iter().map(|&d| u64::from(d)).sum()
    }

    pub fn job_work(&self, job: usize) -> u64 {
        let base = self.task(job, 0);
        self.duration[base..base + self.tasks_per_job]
            .iter()
            .map(|&d| u64::from(d))
            .sum()
    }

    pub fn machine_load(&self, m: usize) -> u64 {
        self.machine_tasks[m]
            .iter()
            .map(|&id| u64::from(self.duration[id]))
            .sum()
    }

    /// Max of the longest job and the busiest machine; no schedule beats it.
    pub fn trivial_lower_bound(&self) -> u64 {
        let jobs = (0..self.num_jobs).map(|j| self.job_work(j)).max().unwrap_or(0);
        let machines = (0..self.num_machines)
            .map(|m| self.machine_load(m))
            .max()
            .unwrap_or(0);
        jobs.max(machines)
    }

    pub fn mean_duration(&self) -> f64 {
        self.total_work() as f64 / self.num_tasks() as f64
    }
}
