//! Depth-first branch-and-bound over the orientation of machine-sharing pairs.
//!
//! A node is a set of fixed orientations. Its earliest-start schedule (heads
//! over job arcs plus fixed arcs) is a relaxation: if it has no overlapping
//! pair it is the best schedule in the subtree. Otherwise the pair with the
//! largest overlap (first in pair order on ties) is oriented both ways. The
//! bound is the larger of the critical path and, per machine, the one-machine
//! head/tail bound `head_k + sum of durations of tasks with head >= head_k +
//! min tail among them` (and its mirror image).

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::heuristics::best_dispatch;
use crate::instance::Instance;
use crate::schedule::{makespan_int, Schedule, ScheduleKind};

use super::{SolveResult, TracePoint};

#[derive(Debug, Clone)]
pub struct ExactOptions {
    pub time_limit: Duration,
    /// Known feasible starts to use as the initial incumbent instead of the
    /// best dispatch rule.
    pub incumbent: Option<Vec<u64>>,
}

impl ExactOptions {
    pub fn with_limit(time_limit: Duration) -> Self {
        Self {
            time_limit,
            incumbent: None,
        }
    }
}

/// Exact solve with a wall-clock limit in seconds. `proved_optimal` is set
/// only if the search tree was exhausted in time.
pub fn solve_exact(inst: &Instance, time_limit_seconds: f64) -> Result<SolveResult> {
    if !(time_limit_seconds > 0.0) || !time_limit_seconds.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time limit must be positive, got {time_limit_seconds}"
        )));
    }
    solve_exact_with(inst, &ExactOptions::with_limit(Duration::from_secs_f64(time_limit_seconds)))
}

pub fn solve_exact_with(inst: &Instance, opts: &ExactOptions) -> Result<SolveResult> {
    if opts.time_limit.is_zero() {
        return Err(Error::InvalidArgument("time limit must be positive".into()));
    }
    let clock = Instant::now();
    let initial = match &opts.incumbent {
        Some(s) => {
            if !crate::schedule::is_feasible_int(inst, s) {
                return Err(Error::InvalidArgument("initial incumbent is infeasible".into()));
            }
            s.clone()
        }
        None => best_dispatch(inst).1,
    };
    let mut search = Search::new(inst, clock, opts.time_limit, Mode::Optimize);
    search.best = makespan_int(inst, &initial);
    search.best_starts = initial;
    search.trace.push(TracePoint {
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        makespan: search.best,
        step: 0,
    });
    search.node();
    log::debug!(
        "exact search: {} nodes, makespan {}, complete {}",
        search.nodes,
        search.best,
        !search.aborted
    );
    Ok(SolveResult {
        schedule: Schedule::from_integers(ScheduleKind::Exact, &search.best_starts),
        makespan: search.best,
        proved_optimal: !search.aborted,
        trace: search.trace,
        steps: search.nodes,
    })
}

/// Up to `max_solutions` distinct earliest-start schedules with makespan
/// `optimum`, in search order. The second value is `true` when the tree was
/// exhausted (every schedule the search can reach was returned).
pub fn enumerate_optimal(
    inst: &Instance,
    optimum: u64,
    max_solutions: usize,
    time_limit: Duration,
) -> (Vec<Vec<u64>>, bool) {
    let mut search = Search::new(
        inst,
        Instant::now(),
        time_limit,
        Mode::Enumerate {
            optimum,
            max: max_solutions.max(1),
            found: Vec::new(),
        },
    );
    search.node();
    let complete = !search.aborted;
    match search.mode {
        Mode::Enumerate { found, .. } => (found, complete),
        Mode::Optimize => unreachable!(),
    }
}

enum Mode {
    Optimize,
    Enumerate {
        optimum: u64,
        max: usize,
        found: Vec<Vec<u64>>,
    },
}

struct Search<'a> {
    inst: &'a Instance,
    dur: Vec<u64>,
    /// Fixed machine arcs, as adjacency lists.
    arc_succ: Vec<Vec<usize>>,
    arc_pred_count: Vec<usize>,
    best: u64,
    best_starts: Vec<u64>,
    mode: Mode,
    nodes: u64,
    clock: Instant,
    limit: Duration,
    aborted: bool,
    trace: Vec<TracePoint>,
    // Scratch buffers reused across nodes.
    order: Vec<usize>,
    indeg: Vec<usize>,
}

impl<'a> Search<'a> {
    fn new(inst: &'a Instance, clock: Instant, limit: Duration, mode: Mode) -> Self {
        let n = inst.num_tasks();
        Self {
            inst,
            dur: inst.durations().iter().map(|&d| u64::from(d)).collect(),
            arc_succ: vec![Vec::new(); n],
            arc_pred_count: vec![0; n],
            best: u64::MAX,
            best_starts: Vec::new(),
            mode,
            nodes: 0,
            clock,
            limit,
            aborted: false,
            trace: Vec::new(),
            order: Vec::with_capacity(n),
            indeg: vec![0; n],
        }
    }

    fn heads_and_tails(&mut self) -> (Vec<u64>, Vec<u64>) {
        let inst = self.inst;
        let n = inst.num_tasks();
        self.order.clear();
        for v in 0..n {
            self.indeg[v] = usize::from(inst.job_predecessor(v).is_some()) + self.arc_pred_count[v];
            if self.indeg[v] == 0 {
                self.order.push(v);
            }
        }
        let mut i = 0;
        while i < self.order.len() {
            let v = self.order[i];
            i += 1;
            if let Some(w) = inst.job_successor(v) {
                self.indeg[w] -= 1;
                if self.indeg[w] == 0 {
                    self.order.push(w);
                }
            }
            for k in 0..self.arc_succ[v].len() {
                let w = self.arc_succ[v][k];
                self.indeg[w] -= 1;
                if self.indeg[w] == 0 {
                    self.order.push(w);
                }
            }
        }
        debug_assert_eq!(self.order.len(), n, "fixed arcs never close a cycle");
        let mut head = vec![0u64; n];
        for &v in &self.order {
            let f = head[v] + self.dur[v];
            if let Some(w) = inst.job_successor(v) {
                head[w] = head[w].max(f);
            }
            for &w in &self.arc_succ[v] {
                head[w] = head[w].max(f);
            }
        }
        let mut tail = vec![0u64; n];
        for &v in self.order.iter().rev() {
            let mut t = 0;
            if let Some(w) = inst.job_successor(v) {
                t = t.max(self.dur[w] + tail[w]);
            }
            for &w in &self.arc_succ[v] {
                t = t.max(self.dur[w] + tail[w]);
            }
            tail[v] = t;
        }
        (head, tail)
    }

    fn lower_bound(&self, head: &[u64], tail: &[u64]) -> (u64, u64) {
        let inst = self.inst;
        let critical = (0..inst.num_tasks())
            .map(|v| head[v] + self.dur[v] + tail[v])
            .max()
            .unwrap_or(0);
        let mut bound = critical;
        let mut buf: Vec<usize> = Vec::new();
        for m in 0..inst.num_machines() {
            buf.clear();
            buf.extend_from_slice(inst.machine_tasks(m));
            for mirrored in [false, true] {
                let (r, q) = if mirrored { (tail, head) } else { (head, tail) };
                buf.sort_unstable_by(|&a, &b| r[b].cmp(&r[a]));
                let mut work = 0;
                let mut min_q = u64::MAX;
                for &v in &buf {
                    work += self.dur[v];
                    min_q = min_q.min(q[v]);
                    bound = bound.max(r[v] + work + min_q);
                }
            }
        }
        (bound, critical)
    }

    fn out_of_time(&mut self) -> bool {
        if self.nodes % 128 == 0 && self.clock.elapsed() >= self.limit {
            self.aborted = true;
        }
        self.aborted
    }

    fn node(&mut self) {
        self.nodes += 1;
        if self.out_of_time() {
            return;
        }
        let (head, tail) = self.heads_and_tails();
        let (bound, critical) = self.lower_bound(&head, &tail);
        let prune = match &self.mode {
            Mode::Optimize => bound >= self.best,
            Mode::Enumerate { optimum, .. } => bound > *optimum,
        };
        if prune {
            return;
        }
        // Pair with the largest overlap; strict comparison keeps the first.
        let mut branch = None;
        let mut largest = 0u64;
        for &(a, b) in self.inst.overlap_pairs() {
            let left = (head[a] + self.dur[a]).saturating_sub(head[b]);
            let right = (head[b] + self.dur[b]).saturating_sub(head[a]);
            let overlap = left.min(right);
            if overlap > largest {
                largest = overlap;
                branch = Some((a, b));
            }
        }
        let Some((a, b)) = branch else {
            self.leaf(head, critical);
            return;
        };
        // The task whose midpoint comes first goes first in the first child.
        let a_first = 2 * head[a] + self.dur[a] <= 2 * head[b] + self.dur[b];
        let children = if a_first { [(a, b), (b, a)] } else { [(b, a), (a, b)] };
        for (from, to) in children {
            self.arc_succ[from].push(to);
            self.arc_pred_count[to] += 1;
            self.node();
            self.arc_succ[from].pop();
            self.arc_pred_count[to] -= 1;
            if self.aborted {
                return;
            }
        }
    }

    fn leaf(&mut self, head: Vec<u64>, makespan: u64) {
        match &mut self.mode {
            Mode::Optimize => {
                if makespan < self.best {
                    self.best = makespan;
                    self.best_starts = head;
                    self.trace.push(TracePoint {
                        elapsed_seconds: self.clock.elapsed().as_secs_f64(),
                        makespan,
                        step: self.nodes,
                    });
                }
            }
            Mode::Enumerate { optimum, max, found } => {
                if makespan == *optimum {
                    found.push(head);
                    if found.len() >= *max {
                        self.aborted = true;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::two_by_two;
    use crate::schedule::is_feasible_int;

    #[test]
    fn two_by_two_optimum() {
        let r = solve_exact(&two_by_two(), 5.0).unwrap();
        assert_eq!(r.makespan, 7);
        assert!(r.proved_optimal);
        assert!(is_feasible_int(&two_by_two(), &r.starts()));
    }

    #[test]
    fn single_job_prefix_sums() {
        let inst = Instance::new(4, vec![vec![3, 1, 0, 2]], vec![vec![2, 7, 1, 4]]).unwrap();
        let r = solve_exact(&inst, 1.0).unwrap();
        assert_eq!(r.starts(), vec![0, 2, 9, 10]);
        assert_eq!(r.makespan, 14);
        assert!(r.proved_optimal);
    }

    #[test]
    fn rejects_non_positive_limit() {
        assert!(solve_exact(&two_by_two(), 0.0).is_err());
        assert!(solve_exact(&two_by_two(), -1.0).is_err());
        assert!(solve_exact(&two_by_two(), f64::NAN).is_err());
    }

    #[test]
    fn enumerates_co_optimal_schedules() {
        // Two identical single-task jobs on one machine: both orders optimal.
        let inst = Instance::new(1, vec![vec![0], vec![0]], vec![vec![2], vec![2]]).unwrap();
        let (found, complete) = enumerate_optimal(&inst, 4, 10, Duration::from_secs(1));
        assert!(complete);
        assert_eq!(found.len(), 2);
        assert!(found.contains(&vec![0, 2]) && found.contains(&vec![2, 0]));
    }
}
