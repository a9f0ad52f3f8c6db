//! Seeded inputs shared by the benchmarks.

use jobshop_core::Instance;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `jobs x machines` instance with a random machine permutation per job and
/// durations uniform in `[1, max_duration]`.
pub fn random_instance(jobs: usize, machines: usize, max_duration: u32, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut machine = Vec::with_capacity(jobs);
    let mut duration = Vec::with_capacity(jobs);
    for _ in 0..jobs {
        let mut perm: Vec<usize> = (0..machines).collect();
        perm.shuffle(&mut rng);
        machine.push(perm);
        duration.push((0..machines).map(|_| rng.gen_range(1..=max_duration)).collect());
    }
    Instance::new(machines, machine, duration).expect("generated instances are valid")
}

/// Real-valued starts uniform in `[0, 2 * total work]`.
pub fn random_prediction(inst: &Instance, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hi = 2.0 * inst.total_work() as f64;
    (0..inst.num_tasks()).map(|_| rng.gen_range(0.0..hi)).collect()
}
