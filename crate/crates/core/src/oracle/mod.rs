//! Reference solvers: an exact branch-and-bound for small instances and an
//! anytime tabu search that records when each improving incumbent was found.

mod bnb;
mod tabu;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::schedule::Schedule;

pub use bnb::{enumerate_optimal, solve_exact, solve_exact_with, ExactOptions};
pub use tabu::{solve_anytime, solve_anytime_with, AnytimeOptions};

/// One improvement of the incumbent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub elapsed_seconds: f64,
    pub makespan: u64,
    /// Search step (node or iteration count) at which it was found; unlike
    /// the timestamp this is reproducible.
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub schedule: Schedule,
    pub makespan: u64,
    pub proved_optimal: bool,
    /// Improving incumbents in the order found; makespans strictly decrease.
    pub trace: Vec<TracePoint>,
    /// Branch-and-bound nodes or tabu iterations performed.
    pub steps: u64,
}

impl SolveResult {
    pub fn starts(&self) -> Vec<u64> {
        self.schedule.integer_starts().expect("solver schedules are integral")
    }
}

/// First time in `trace` at which the incumbent is no worse than `target`.
pub fn match_time(trace: &[TracePoint], target: u64) -> Option<f64> {
    trace
        .iter()
        .find(|p| p.makespan <= target)
        .map(|p| p.elapsed_seconds)
}

/// Seconds the anytime search needs to reach `target`, or `None` if it does
/// not get there within `time_limit`. Targets below the trivial lower bound
/// are unreachable and return `None` immediately.
pub fn time_to_match(
    inst: &crate::Instance,
    target: u64,
    time_limit: Duration,
    seed: u64,
) -> Option<f64> {
    if target < inst.trivial_lower_bound() {
        return None;
    }
    let opts = AnytimeOptions {
        time_limit,
        stop_at: Some(target),
        ..AnytimeOptions::default()
    };
    let result = solve_anytime_with(inst, seed, &opts);
    match_time(&result.trace, target)
}

/// Heads and tails of a fully oriented disjunctive graph.
pub(crate) struct Timing {
    pub head: Vec<u64>,
    pub tail: Vec<u64>,
    pub makespan: u64,
}

/// Longest-path heads (earliest starts) and tails (longest path from a task's
/// completion to the end) given per-machine sequences. `None` on a cycle.
pub(crate) fn timing(inst: &crate::Instance, sequences: &[Vec<usize>]) -> Option<Timing> {
    let n = inst.num_tasks();
    let mut msucc = vec![usize::MAX; n];
    let mut mpred = vec![usize::MAX; n];
    for seq in sequences {
        for w in seq.windows(2) {
            msucc[w[0]] = w[1];
            mpred[w[1]] = w[0];
        }
    }
    let mut indeg: Vec<u8> = (0..n)
        .map(|v| u8::from(inst.job_predecessor(v).is_some()) + u8::from(mpred[v] != usize::MAX))
        .collect();
    let mut order = Vec::with_capacity(n);
    let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    while let Some(v) = stack.pop() {
        order.push(v);
        for w in [inst.job_successor(v), (msucc[v] != usize::MAX).then_some(msucc[v])]
            .into_iter()
            .flatten()
        {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                stack.push(w);
            }
        }
    }
    if order.len() < n {
        return None;
    }
    let d = |v: usize| u64::from(inst.duration(v));
    let mut head = vec![0u64; n];
    for &v in &order {
        let f = head[v] + d(v);
        if let Some(w) = inst.job_successor(v) {
            head[w] = head[w].max(f);
        }
        if msucc[v] != usize::MAX {
            head[msucc[v]] = head[msucc[v]].max(f);
        }
    }
    let mut tail = vec![0u64; n];
    for &v in order.iter().rev() {
        let mut t = 0;
        if let Some(w) = inst.job_successor(v) {
            t = t.max(d(w) + tail[w]);
        }
        if msucc[v] != usize::MAX {
            t = t.max(d(msucc[v]) + tail[msucc[v]]);
        }
        tail[v] = t;
    }
    let makespan = (0..n).map(|v| head[v] + d(v)).max().unwrap_or(0);
    Some(Timing { head, tail, makespan })
}
