//! Violation degrees of the precedence and no-overlap constraints and their
//! subgradients with respect to start times.
//!
//! Precedence constraint `(j, t)` is `s[j][t+1] >= s[j][t] + d[j][t]`; its
//! degree is `max(0, s[j][t] + d[j][t] - s[j][t+1])`. For a machine-sharing
//! pair `(a, b)` the no-overlap degree is the smaller of the two one-sided
//! overlaps `max(0, s_a + d_a - s_b)` ("left", a before b) and
//! `max(0, s_b + d_b - s_a)` ("right"), i.e. the least distance one task has
//! to move to clear the other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::schedule::{check_dims, Schedule};

/// Violation degree per constraint.
///
/// `precedence[inst.precedence_index(j, t)]` belongs to the arc between task
/// `t` and `t + 1` of job `j`; `overlap[k]` belongs to `inst.overlap_pairs()[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub precedence: Vec<f64>,
    pub overlap: Vec<f64>,
}

impl ViolationReport {
    pub fn total_precedence(&self) -> f64 {
        self.precedence.iter().sum()
    }

    pub fn total_overlap(&self) -> f64 {
        self.overlap.iter().sum()
    }

    pub fn mean_precedence(&self) -> f64 {
        mean(&self.precedence)
    }

    pub fn mean_overlap(&self) -> f64 {
        mean(&self.overlap)
    }

    pub fn max_degree(&self) -> f64 {
        self.precedence
            .iter()
            .chain(&self.overlap)
            .fold(0.0, |acc, &v| acc.max(v))
    }

    pub fn is_zero(&self) -> bool {
        self.precedence.iter().chain(&self.overlap).all(|&v| v == 0.0)
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Lagrangian multipliers, one per individual constraint, laid out like
/// [`ViolationReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub precedence: Vec<f64>,
    pub overlap: Vec<f64>,
}

impl Multipliers {
    pub fn zeros(inst: &Instance) -> Self {
        Self {
            precedence: vec![0.0; inst.num_precedences()],
            overlap: vec![0.0; inst.overlap_pairs().len()],
        }
    }

    pub fn len(&self) -> usize {
        self.precedence.len() + self.overlap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.precedence.iter().chain(&self.overlap)
    }

    pub fn validate(&self, inst: &Instance) -> Result<()> {
        if self.precedence.len() != inst.num_precedences() {
            return Err(Error::DimensionMismatch {
                expected: inst.num_precedences(),
                actual: self.precedence.len(),
            });
        }
        if self.overlap.len() != inst.overlap_pairs().len() {
            return Err(Error::DimensionMismatch {
                expected: inst.overlap_pairs().len(),
                actual: self.overlap.len(),
            });
        }
        if let Some((index, &value)) = self.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NegativeMultiplier { index, value });
        }
        Ok(())
    }
}

/// Left and right one-sided overlaps of the pair `(a, b)`.
#[inline]
pub fn one_sided_overlaps(sa: f64, da: f64, sb: f64, db: f64) -> (f64, f64) {
    ((sa + da - sb).max(0.0), (sb + db - sa).max(0.0))
}

pub fn violation_degrees(inst: &Instance, sched: &Schedule) -> Result<ViolationReport> {
    check_dims(inst, sched.len())?;
    Ok(degrees_with(inst, &inst.durations_f64(), sched.starts()))
}

/// Violation degrees for arbitrary real durations sharing `inst`'s machine
/// assignment. Slices must have `inst.num_tasks()` entries.
pub fn degrees_with(inst: &Instance, durations: &[f64], starts: &[f64]) -> ViolationReport {
    let tpj = inst.tasks_per_job();
    let mut precedence = Vec::with_capacity(inst.num_precedences());
    for j in 0..inst.num_jobs() {
        for t in 0..tpj - 1 {
            let a = inst.task(j, t);
            precedence.push((starts[a] + durations[a] - starts[a + 1]).max(0.0));
        }
    }
    let overlap = inst
        .overlap_pairs()
        .iter()
        .map(|&(a, b)| {
            let (l, r) = one_sided_overlaps(starts[a], durations[a], starts[b], durations[b]);
            l.min(r)
        })
        .collect();
    ViolationReport { precedence, overlap }
}

/// `sum_c lambda_c * nu_c`.
pub fn weighted_violation(
    inst: &Instance,
    durations: &[f64],
    starts: &[f64],
    mult: &Multipliers,
) -> f64 {
    let report = degrees_with(inst, durations, starts);
    let p: f64 = report
        .precedence
        .iter()
        .zip(&mult.precedence)
        .map(|(v, l)| v * l)
        .sum();
    let o: f64 = report
        .overlap
        .iter()
        .zip(&mult.overlap)
        .map(|(v, l)| v * l)
        .sum();
    p + o
}

/// A subgradient of `sum_c lambda_c * nu_c` with respect to each start time.
///
/// `max(0, g)` contributes the gradient of `g` only when `g > 0`. For the
/// no-overlap minimum, ties between the two sides go to the left side.
pub fn violation_subgradient(
    inst: &Instance,
    sched: &Schedule,
    mult: &Multipliers,
) -> Result<Vec<f64>> {
    check_dims(inst, sched.len())?;
    mult.validate(inst)?;
    let mut grad = vec![0.0; inst.num_tasks()];
    accumulate_subgradient(inst, &inst.durations_f64(), sched.starts(), mult, 1.0, &mut grad);
    Ok(grad)
}

/// Adds `scale * d/ds sum_c lambda_c nu_c` into `grad`. Constraints with a zero
/// multiplier contribute nothing at all, so a zero multiplier vector leaves
/// `grad` bit-identical.
pub fn accumulate_subgradient(
    inst: &Instance,
    durations: &[f64],
    starts: &[f64],
    mult: &Multipliers,
    scale: f64,
    grad: &mut [f64],
) {
    let tpj = inst.tasks_per_job();
    for j in 0..inst.num_jobs() {
        for t in 0..tpj - 1 {
            let lambda = mult.precedence[inst.precedence_index(j, t)];
            if lambda == 0.0 {
                continue;
            }
            let a = inst.task(j, t);
            if starts[a] + durations[a] - starts[a + 1] > 0.0 {
                grad[a] += scale * lambda;
                grad[a + 1] -= scale * lambda;
            }
        }
    }
    for (&(a, b), &lambda) in inst.overlap_pairs().iter().zip(&mult.overlap) {
        if lambda == 0.0 {
            continue;
        }
        let left = starts[a] + durations[a] - starts[b];
        let right = starts[b] + durations[b] - starts[a];
        if left.max(0.0) <= right.max(0.0) {
            if left > 0.0 {
                grad[a] += scale * lambda;
                grad[b] -= scale * lambda;
            }
        } else if right > 0.0 {
            grad[b] += scale * lambda;
            grad[a] -= scale * lambda;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::two_by_two;
    use crate::schedule::ScheduleKind;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair_instance(da: u32, db: u32) -> Instance {
        Instance::new(1, vec![vec![0], vec![0]], vec![vec![da], vec![db]]).unwrap()
    }

    #[test]
    fn overlap_takes_smaller_side() {
        assert_eq!(one_sided_overlaps(0.0, 5.0, 3.0, 4.0), (2.0, 7.0));
        let inst = pair_instance(5, 4);
        let s = Schedule::from_integers(ScheduleKind::Heuristic, &[0, 3]);
        assert_eq!(violation_degrees(&inst, &s).unwrap().overlap, vec![2.0]);
    }

    #[test]
    fn touching_tasks_do_not_overlap() {
        let inst = pair_instance(3, 4);
        let s = Schedule::from_integers(ScheduleKind::Heuristic, &[0, 3]);
        assert_eq!(violation_degrees(&inst, &s).unwrap().overlap, vec![0.0]);
    }

    #[test]
    fn precedence_degree() {
        let inst = Instance::new(2, vec![vec![0, 1]], vec![vec![3, 1]]).unwrap();
        let s = Schedule::from_integers(ScheduleKind::Heuristic, &[0, 2]);
        assert_eq!(violation_degrees(&inst, &s).unwrap().precedence, vec![1.0]);
    }

    #[test]
    fn zero_violation_zero_gradient() {
        let inst = two_by_two();
        let s = Schedule::from_integers(ScheduleKind::Exact, &[0, 3, 0, 3]);
        let mult = Multipliers {
            precedence: vec![1.0, 2.0],
            overlap: vec![3.0, 4.0],
        };
        let g = violation_subgradient(&inst, &s, &mult).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn active_left_branch_gradient() {
        let inst = pair_instance(5, 4);
        let s = Schedule::from_integers(ScheduleKind::Heuristic, &[0, 3]);
        let mult = Multipliers {
            precedence: vec![],
            overlap: vec![1.0],
        };
        assert_eq!(violation_subgradient(&inst, &s, &mult).unwrap(), vec![1.0, -1.0]);
    }

    #[test]
    fn negative_multiplier_rejected() {
        let inst = pair_instance(5, 4);
        let s = Schedule::from_integers(ScheduleKind::Heuristic, &[0, 3]);
        let mult = Multipliers {
            precedence: vec![],
            overlap: vec![-0.5],
        };
        assert!(matches!(
            violation_subgradient(&inst, &s, &mult),
            Err(Error::NegativeMultiplier { .. })
        ));
    }

    fn random_case(seed: u64) -> (Instance, Vec<f64>, Multipliers) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let jobs = rng.gen_range(1..=5);
        let machines = rng.gen_range(1..=4);
        let mut machine = Vec::new();
        let mut duration = Vec::new();
        for _ in 0..jobs {
            let mut perm: Vec<usize> = (0..machines).collect();
            rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
            machine.push(perm);
            duration.push((0..machines).map(|_| rng.gen_range(1..=9)).collect());
        }
        let inst = Instance::new(machines, machine, duration).unwrap();
        let horizon = inst.total_work() as f64;
        let starts = (0..inst.num_tasks())
            .map(|_| rng.gen_range(0.0..horizon))
            .collect();
        let mut mult = Multipliers::zeros(&inst);
        for l in mult.precedence.iter_mut().chain(mult.overlap.iter_mut()) {
            *l = rng.gen_range(0.0..2.0);
        }
        (inst, starts, mult)
    }

    /// Central differences, h = 1e-4, skipping coordinates whose +-h
    /// perturbation moves any max/min argument across a kink.
    #[test]
    fn subgradient_matches_finite_differences() {
        let h = 1e-4;
        let mut checked = 0;
        for seed in 0..200 {
            let (inst, starts, mult) = random_case(seed);
            let d = inst.durations_f64();
            let mut grad = vec![0.0; starts.len()];
            accumulate_subgradient(&inst, &d, &starts, &mult, 1.0, &mut grad);
            for i in 0..starts.len() {
                if near_kink(&inst, &d, &starts, i, h) {
                    continue;
                }
                let mut plus = starts.clone();
                plus[i] += h;
                let mut minus = starts.clone();
                minus[i] -= h;
                let fd = (weighted_violation(&inst, &d, &plus, &mult)
                    - weighted_violation(&inst, &d, &minus, &mult))
                    / (2.0 * h);
                let denom = grad[i].abs().max(fd.abs()).max(1e-6);
                assert!(
                    (grad[i] - fd).abs() / denom < 1e-4,
                    "seed {seed} coord {i}: analytic {} vs fd {fd}",
                    grad[i]
                );
                checked += 1;
            }
        }
        assert!(checked > 500);
    }

    fn near_kink(inst: &Instance, d: &[f64], s: &[f64], i: usize, h: f64) -> bool {
        let close = |g: f64| g.abs() <= 2.0 * h;
        for j in 0..inst.num_jobs() {
            for t in 0..inst.tasks_per_job() - 1 {
                let a = inst.task(j, t);
                if (a == i || a + 1 == i) && close(s[a] + d[a] - s[a + 1]) {
                    return true;
                }
            }
        }
        inst.overlap_pairs().iter().any(|&(a, b)| {
            if a != i && b != i {
                return false;
            }
            let l = s[a] + d[a] - s[b];
            let r = s[b] + d[b] - s[a];
            close(l) || close(r) || close(l.max(0.0) - r.max(0.0))
        })
    }

    proptest! {
        #[test]
        fn degrees_nonnegative_and_translation_invariant(seed in 0u64..10_000, shift in 0.0f64..50.0) {
            let (inst, starts, _) = random_case(seed);
            let d = inst.durations_f64();
            let r = degrees_with(&inst, &d, &starts);
            prop_assert!(r.precedence.iter().chain(&r.overlap).all(|&v| v >= 0.0));
            let shifted: Vec<f64> = starts.iter().map(|s| s + shift).collect();
            let r2 = degrees_with(&inst, &d, &shifted);
            for (x, y) in r.precedence.iter().chain(&r.overlap).zip(r2.precedence.iter().chain(&r2.overlap)) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn overlap_is_symmetric(sa in 0.0f64..20.0, da in 1.0f64..9.0, sb in 0.0f64..20.0, db in 1.0f64..9.0) {
            let (l1, r1) = one_sided_overlaps(sa, da, sb, db);
            let (l2, r2) = one_sided_overlaps(sb, db, sa, da);
            prop_assert_eq!(l1.min(r1), l2.min(r2));
        }
    }
}
