//! Priority dispatch rules on a non-delay schedule generation scheme.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::instance::Instance;
use crate::schedule::{Schedule, ScheduleKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DispatchRule {
    /// Shortest processing time.
    Spt,
    /// Least work remaining in the job, the candidate task included.
    Lwr,
    /// Most work remaining.
    Mwr,
    /// Least operations remaining.
    Lor,
    /// Most operations remaining.
    Mor,
}

impl DispatchRule {
    pub const ALL: [DispatchRule; 5] = [
        DispatchRule::Spt,
        DispatchRule::Lwr,
        DispatchRule::Mwr,
        DispatchRule::Lor,
        DispatchRule::Mor,
    ];

    /// Priority of task `position` of `job`; smaller is dispatched first.
    fn key(self, inst: &Instance, remaining_work: &[u64], job: usize, position: usize) -> i64 {
        let task = inst.task(job, position);
        let ops_left = (inst.tasks_per_job() - position) as i64;
        let work_left = remaining_work[task] as i64;
        match self {
            DispatchRule::Spt => i64::from(inst.duration(task)),
            DispatchRule::Lwr => work_left,
            DispatchRule::Mwr => -work_left,
            DispatchRule::Lor => ops_left,
            DispatchRule::Mor => -ops_left,
        }
    }
}

impl fmt::Display for DispatchRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DispatchRule::Spt => "SPT",
            DispatchRule::Lwr => "LWR",
            DispatchRule::Mwr => "MWR",
            DispatchRule::Lor => "LOR",
            DispatchRule::Mor => "MOR",
        };
        f.write_str(s)
    }
}

impl FromStr for DispatchRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_uppercase().as_str() {
            "SPT" => Ok(DispatchRule::Spt),
            "LWR" => Ok(DispatchRule::Lwr),
            "MWR" => Ok(DispatchRule::Mwr),
            "LOR" => Ok(DispatchRule::Lor),
            "MOR" => Ok(DispatchRule::Mor),
            other => Err(Error::InvalidArgument(format!("unknown dispatch rule `{other}`"))),
        }
    }
}

/// Non-delay dispatching: at each step the earliest time any unscheduled
/// job-head task can start is found, and among the tasks able to start at
/// exactly that time the rule picks one (ties to job, then position).
pub fn dispatch(inst: &Instance, rule: DispatchRule) -> Schedule {
    Schedule::from_integers(ScheduleKind::Heuristic, &dispatch_starts(inst, rule))
}

pub(crate) fn dispatch_starts(inst: &Instance, rule: DispatchRule) -> Vec<u64> {
    let n = inst.num_tasks();
    let tpj = inst.tasks_per_job();
    let mut remaining_work = vec![0u64; n];
    for j in 0..inst.num_jobs() {
        let mut acc = 0;
        for t in (0..tpj).rev() {
            let id = inst.task(j, t);
            acc += u64::from(inst.duration(id));
            remaining_work[id] = acc;
        }
    }
    let mut next = vec![0usize; inst.num_jobs()];
    let mut job_ready = vec![0u64; inst.num_jobs()];
    let mut machine_ready = vec![0u64; inst.num_machines()];
    let mut starts = vec![0u64; n];
    for _ in 0..n {
        let earliest = |j: usize| {
            let m = inst.machine(inst.task(j, next[j]));
            job_ready[j].max(machine_ready[m])
        };
        let now = (0..inst.num_jobs())
            .filter(|&j| next[j] < tpj)
            .map(earliest)
            .min()
            .expect("unscheduled task remains");
        let job = (0..inst.num_jobs())
            .filter(|&j| next[j] < tpj && earliest(j) == now)
            .min_by_key(|&j| (rule.key(inst, &remaining_work, j, next[j]), j))
            .expect("a task can start at the event time");
        let task = inst.task(job, next[job]);
        let finish = now + u64::from(inst.duration(task));
        starts[task] = now;
        job_ready[job] = finish;
        machine_ready[inst.machine(task)] = finish;
        next[job] += 1;
    }
    starts
}

/// The best of the five rules, with the rule that produced it.
pub fn best_dispatch(inst: &Instance) -> (DispatchRule, Vec<u64>) {
    DispatchRule::ALL
        .iter()
        .map(|&r| (r, dispatch_starts(inst, r)))
        .min_by_key(|(_, s)| crate::schedule::makespan_int(inst, s))
        .expect("five rules")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::two_by_two;
    use crate::schedule::{check_feasible, makespan};

    #[test]
    fn single_job_is_prefix_sums() {
        let inst = Instance::new(3, vec![vec![2, 0, 1]], vec![vec![4, 1, 3]]).unwrap();
        for rule in DispatchRule::ALL {
            assert_eq!(dispatch(&inst, rule).starts(), &[0.0, 4.0, 5.0]);
        }
    }

    #[test]
    fn spt_on_two_by_two() {
        // t=0: both heads ready, SPT takes job 1 (d=2) on m1, then job 0 on
        // m0. t=3: job 0's second task (d=2) beats job 1's (d=4).
        let inst = two_by_two();
        let s = dispatch(&inst, DispatchRule::Spt);
        assert_eq!(s.starts(), &[0.0, 3.0, 0.0, 3.0]);
        assert_eq!(makespan(&inst, &s).unwrap(), 7.0);
    }

    #[test]
    fn all_rules_feasible() {
        let inst = two_by_two();
        for rule in DispatchRule::ALL {
            let s = dispatch(&inst, rule);
            assert!(check_feasible(&inst, &s).unwrap().0, "{rule}");
            assert!(makespan(&inst, &s).unwrap() >= 7.0);
        }
    }

    #[test]
    fn parse_round_trip() {
        for rule in DispatchRule::ALL {
            assert_eq!(rule.to_string().parse::<DispatchRule>().unwrap(), rule);
        }
        assert!("FIFO".parse::<DispatchRule>().is_err());
    }
}
