//! Test-side oracles, written independently of the library code they check.

#![allow(dead_code)]

use std::path::PathBuf;

use jobshop_core::Instance;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(name)
}

/// Every job visits every machine once, in random order.
pub fn random_instance(rng: &mut impl Rng, jobs: usize, machines: usize, max_duration: u32) -> Instance {
    let mut machine = Vec::with_capacity(jobs);
    let mut duration = Vec::with_capacity(jobs);
    for _ in 0..jobs {
        let mut perm: Vec<usize> = (0..machines).collect();
        perm.shuffle(rng);
        machine.push(perm);
        duration.push((0..machines).map(|_| rng.gen_range(1..=max_duration)).collect());
    }
    Instance::new(machines, machine, duration).unwrap()
}

/// Tasks of each machine in job order.
pub fn tasks_by_machine(inst: &Instance) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); inst.num_machines()];
    for t in 0..inst.num_tasks() {
        out[inst.machine(t)].push(t);
    }
    out
}

/// Earliest starts under fixed machine sequences by repeated relaxation of
/// every arc; `None` if the arcs contain a cycle.
pub fn relaxation_earliest_starts(inst: &Instance, sequences: &[Vec<usize>]) -> Option<Vec<u64>> {
    let n = inst.num_tasks();
    let t = inst.tasks_per_job();
    let mut arcs = Vec::new();
    for task in 0..n {
        if task % t + 1 < t {
            arcs.push((task, task + 1));
        }
    }
    for seq in sequences {
        for w in seq.windows(2) {
            arcs.push((w[0], w[1]));
        }
    }
    let mut s = vec![0u64; n];
    for _ in 0..=n {
        let mut changed = false;
        for &(a, b) in &arcs {
            let ready = s[a] + inst.duration(a) as u64;
            if s[b] < ready {
                s[b] = ready;
                changed = true;
            }
        }
        if !changed {
            return Some(s);
        }
    }
    None
}

pub fn makespan_of(inst: &Instance, starts: &[u64]) -> u64 {
    (0..inst.num_tasks())
        .map(|t| starts[t] + inst.duration(t) as u64)
        .max()
        .unwrap_or(0)
}

/// Direct check of job order and machine exclusivity on real-valued starts.
pub fn feasible_f64(inst: &Instance, starts: &[f64], tol: f64) -> bool {
    let n = inst.num_tasks();
    let t = inst.tasks_per_job();
    let d = |i: usize| inst.duration(i) as f64;
    if starts.iter().any(|s| !s.is_finite() || *s < -tol) {
        return false;
    }
    for i in 0..n {
        if i % t + 1 < t && starts[i] + d(i) > starts[i + 1] + tol {
            return false;
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            if inst.machine(a) == inst.machine(b) && a / t != b / t {
                let apart = starts[a] + d(a) <= starts[b] + tol || starts[b] + d(b) <= starts[a] + tol;
                if !apart {
                    return false;
                }
            }
        }
    }
    true
}

pub fn feasible_int(inst: &Instance, starts: &[u64]) -> bool {
    let f: Vec<f64> = starts.iter().map(|&s| s as f64).collect();
    feasible_f64(inst, &f, 0.0)
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Minimum makespan over every combination of machine sequences, with one
/// sequence set attaining it.
pub fn brute_force_optimum(inst: &Instance) -> (u64, Vec<Vec<usize>>) {
    let per_machine: Vec<Vec<Vec<usize>>> = tasks_by_machine(inst).iter().map(|ts| permutations(ts)).collect();
    let mut best: Option<(u64, Vec<Vec<usize>>)> = None;
    let mut idx = vec![0usize; per_machine.len()];
    loop {
        let seqs: Vec<Vec<usize>> = idx.iter().zip(&per_machine).map(|(&i, p)| p[i].clone()).collect();
        if let Some(s) = relaxation_earliest_starts(inst, &seqs) {
            let mk = makespan_of(inst, &s);
            if best.as_ref().is_none_or(|(b, _)| mk < *b) {
                best = Some((mk, seqs));
            }
        }
        let mut m = 0;
        loop {
            if m == idx.len() {
                return best.expect("some sequence combination is acyclic");
            }
            idx[m] += 1;
            if idx[m] < per_machine[m].len() {
                break;
            }
            idx[m] = 0;
            m += 1;
        }
    }
}

/// Random-priority list schedule: repeatedly picks a random job and starts
/// its next task as early as its job and machine allow. Returns the starts
/// and the order tasks were placed in.
pub fn random_list_schedule(inst: &Instance, rng: &mut impl Rng) -> (Vec<u64>, Vec<usize>) {
    let (j, t) = (inst.num_jobs(), inst.tasks_per_job());
    let mut next = vec![0usize; j];
    let mut job_ready = vec![0u64; j];
    let mut machine_ready = vec![0u64; inst.num_machines()];
    let mut starts = vec![0u64; inst.num_tasks()];
    let mut placed = Vec::with_capacity(inst.num_tasks());
    while placed.len() < inst.num_tasks() {
        let open: Vec<usize> = (0..j).filter(|&k| next[k] < t).collect();
        let job = *open.choose(rng).unwrap();
        let task = job * t + next[job];
        let m = inst.machine(task);
        let s = job_ready[job].max(machine_ready[m]);
        starts[task] = s;
        job_ready[job] = s + inst.duration(task) as u64;
        machine_ready[m] = job_ready[job];
        next[job] += 1;
        placed.push(task);
    }
    (starts, placed)
}

/// Machine sequences implied by integer starts (ties by task id).
pub fn sequences_from_starts(inst: &Instance, starts: &[u64]) -> Vec<Vec<usize>> {
    let mut seqs = tasks_by_machine(inst);
    for seq in &mut seqs {
        seq.sort_by_key(|&x| (starts[x], x));
    }
    seqs
}
