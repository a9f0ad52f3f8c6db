//! Tabu search over machine sequences with the adjacent-swap neighbourhood on
//! one critical path (swapping two consecutive same-machine critical tasks
//! never creates a cycle).

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::heuristics::best_dispatch;
use crate::instance::Instance;
use crate::recovery::MachineOrdering;
use crate::schedule::{Schedule, ScheduleKind};

use super::{timing, SolveResult, Timing, TracePoint};

#[derive(Debug, Clone)]
pub struct AnytimeOptions {
    pub time_limit: Duration,
    /// Stop as soon as the incumbent is at most this makespan.
    pub stop_at: Option<u64>,
    pub max_iterations: Option<u64>,
    /// Inclusive range the tabu tenure is drawn from after each move.
    pub tenure: (u64, u64),
    /// Iterations without improvement before restarting from a perturbed
    /// copy of the best solution.
    pub restart_after: u64,
    pub perturbation_moves: usize,
}

impl Default for AnytimeOptions {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(1),
            stop_at: None,
            max_iterations: None,
            tenure: (6, 12),
            restart_after: 500,
            perturbation_moves: 4,
        }
    }
}

pub fn solve_anytime(inst: &Instance, time_limit_seconds: f64, seed: u64) -> SolveResult {
    let opts = AnytimeOptions {
        time_limit: Duration::from_secs_f64(time_limit_seconds.max(0.0)),
        ..AnytimeOptions::default()
    };
    solve_anytime_with(inst, seed, &opts)
}

/// Starts from the best dispatch-rule schedule and records every strict
/// improvement with its timestamp. The sequence of visited solutions depends
/// only on the instance, seed and options; wall-clock time only decides when
/// the search stops.
pub fn solve_anytime_with(inst: &Instance, seed: u64, opts: &AnytimeOptions) -> SolveResult {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lower = inst.trivial_lower_bound();

    let (_, initial) = best_dispatch(inst);
    let initial: Vec<f64> = initial.iter().map(|&s| s as f64).collect();
    let mut current = MachineOrdering::from_starts(inst, &initial).into_sequences();
    let mut current_timing = timing(inst, &current).expect("dispatch schedules are acyclic");
    let mut best = current.clone();
    let mut best_timing = timing(inst, &best).expect("acyclic");
    let mut trace = vec![TracePoint {
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        makespan: best_timing.makespan,
        step: 0,
    }];

    let mut tabu: HashMap<(usize, usize), u64> = HashMap::new();
    let mut proved = best_timing.makespan <= lower;
    let mut iter = 0u64;
    let mut last_improvement = 0u64;
    let done = |mk: u64, iter: u64| {
        opts.stop_at.is_some_and(|t| mk <= t)
            || mk <= lower
            || opts.max_iterations.is_some_and(|m| iter >= m)
            || clock.elapsed() >= opts.time_limit
    };

    while !done(best_timing.makespan, iter) {
        iter += 1;
        let moves = critical_moves(inst, &current, &current_timing);
        if moves.is_empty() {
            // The critical path is a single job chain: nothing beats it.
            proved = true;
            break;
        }
        let mut candidates: Vec<((usize, usize), Vec<Vec<usize>>, Timing)> = Vec::with_capacity(moves.len());
        for &(m, pos) in &moves {
            let mut seqs = current.clone();
            seqs[m].swap(pos, pos + 1);
            if let Some(t) = timing(inst, &seqs) {
                let pair = (current[m][pos], current[m][pos + 1]);
                candidates.push((pair, seqs, t));
            }
        }
        let admissible: Vec<usize> = (0..candidates.len())
            .filter(|&i| {
                let (pair, _, t) = &candidates[i];
                let forbidden = tabu.get(pair).is_some_and(|&until| until > iter);
                !forbidden || t.makespan < best_timing.makespan
            })
            .collect();
        let pool: Vec<usize> = if admissible.is_empty() {
            (0..candidates.len()).collect()
        } else {
            let top = admissible.iter().map(|&i| candidates[i].2.makespan).min().unwrap();
            admissible
                .into_iter()
                .filter(|&i| candidates[i].2.makespan == top)
                .collect()
        };
        let Some(&pick) = pool.choose(&mut rng) else {
            break;
        };
        let ((u, v), seqs, t) = candidates.swap_remove(pick);
        let tenure = rng.gen_range(opts.tenure.0..=opts.tenure.1.max(opts.tenure.0));
        // Forbid putting u straight back in front of v.
        tabu.insert((v, u), iter + tenure);
        current = seqs;
        current_timing = t;

        if current_timing.makespan < best_timing.makespan {
            best = current.clone();
            best_timing = timing(inst, &best).expect("acyclic");
            last_improvement = iter;
            trace.push(TracePoint {
                elapsed_seconds: clock.elapsed().as_secs_f64(),
                makespan: best_timing.makespan,
                step: iter,
            });
        } else if iter - last_improvement >= opts.restart_after {
            current = perturb(inst, &best, opts.perturbation_moves, &mut rng);
            current_timing = timing(inst, &current).expect("perturbation keeps acyclicity");
            tabu.clear();
            last_improvement = iter;
        }
    }
    if best_timing.makespan <= lower {
        proved = true;
    }

    SolveResult {
        schedule: Schedule::from_integers(ScheduleKind::Heuristic, &best_timing.head),
        makespan: best_timing.makespan,
        proved_optimal: proved,
        trace,
        steps: iter,
    }
}

/// `(machine, position)` of every adjacent same-machine pair on one critical
/// path, swapping positions `position` and `position + 1`.
fn critical_moves(inst: &Instance, seqs: &[Vec<usize>], t: &Timing) -> Vec<(usize, usize)> {
    let n = inst.num_tasks();
    let mut pos = vec![0usize; n];
    let mut msucc = vec![usize::MAX; n];
    for seq in seqs {
        for (i, &v) in seq.iter().enumerate() {
            pos[v] = i;
            if i + 1 < seq.len() {
                msucc[v] = seq[i + 1];
            }
        }
    }
    let d = |v: usize| u64::from(inst.duration(v));
    let on_path = |v: usize| t.head[v] + d(v) + t.tail[v] == t.makespan;
    let Some(mut v) = (0..n).find(|&v| t.head[v] == 0 && on_path(v)) else {
        return Vec::new();
    };
    let mut moves = Vec::new();
    loop {
        let follows = |w: usize| t.head[w] == t.head[v] + d(v) && d(w) + t.tail[w] == t.tail[v];
        let next_machine = (msucc[v] != usize::MAX && follows(msucc[v])).then_some(msucc[v]);
        let next_job = inst.job_successor(v).filter(|&w| follows(w));
        match (next_machine, next_job) {
            (Some(w), _) => {
                moves.push((inst.machine(v), pos[v]));
                v = w;
            }
            (None, Some(w)) => v = w,
            (None, None) => break,
        }
    }
    moves
}

/// A few random adjacent swaps that keep the sequences acyclic.
fn perturb(inst: &Instance, base: &[Vec<usize>], moves: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut seqs = base.to_vec();
    let mut applied = 0;
    let mut attempts = 0;
    while applied < moves && attempts < moves * 20 {
        attempts += 1;
        let m = rng.gen_range(0..seqs.len());
        if seqs[m].len() < 2 {
            continue;
        }
        let p = rng.gen_range(0..seqs[m].len() - 1);
        seqs[m].swap(p, p + 1);
        if timing(inst, &seqs).is_some() {
            applied += 1;
        } else {
            seqs[m].swap(p, p + 1);
        }
    }
    seqs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::two_by_two;
    use crate::oracle::time_to_match;
    use crate::schedule::is_feasible_int;

    fn ft06() -> Instance {
        crate::io::parse_jsplib(include_str!("../../../../instances/ft06.txt")).unwrap()
    }

    #[test]
    fn converges_on_two_by_two() {
        let r = solve_anytime(&two_by_two(), 1.0, 7);
        assert_eq!(r.makespan, 7);
        assert!(is_feasible_int(&two_by_two(), &r.starts()));
    }

    #[test]
    fn trace_is_monotone_and_seed_deterministic() {
        let inst = ft06();
        let opts = AnytimeOptions {
            time_limit: Duration::from_secs(30),
            max_iterations: Some(3000),
            ..AnytimeOptions::default()
        };
        let a = solve_anytime_with(&inst, 3, &opts);
        let b = solve_anytime_with(&inst, 3, &opts);
        assert!(a.trace.windows(2).all(|w| w[1].makespan < w[0].makespan));
        let key = |r: &SolveResult| r.trace.iter().map(|p| (p.step, p.makespan)).collect::<Vec<_>>();
        assert_eq!(key(&a), key(&b));
        assert_eq!(a.starts(), b.starts());
        assert!(is_feasible_int(&inst, &a.starts()));
        assert_eq!(a.makespan, a.trace.last().unwrap().makespan);
    }

    #[test]
    fn time_to_match_targets() {
        let inst = two_by_two();
        let limit = Duration::from_millis(200);
        let heuristic = crate::schedule::makespan_int(&inst, &best_dispatch(&inst).1);
        assert!(time_to_match(&inst, heuristic, limit, 1).unwrap() < 0.1);
        assert!(time_to_match(&inst, 7, limit, 1).is_some());
        assert!(time_to_match(&inst, 6, limit, 1).is_none());
    }
}
