mod common;

use jobshop_core::harness::{generate_dataset, GenSpec};
use jobshop_core::io::{format_jsplib, parse_jsplib, read_dataset_from, write_dataset_to};
use jobshop_core::neural::JmDepths;
use jobshop_core::oracle::{solve_anytime_with, AnytimeOptions};
use jobshop_core::violation::degrees_with;
use jobshop_core::{
    check_feasible, dispatch, makespan, recover, solve_exact, violation_degrees, Architecture, DispatchRule, Instance,
    Model, Network, OrderingKey, Scaler, Schedule,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn instance(seed: u64, max_jobs: usize, max_machines: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (j, m) = (rng.gen_range(1..=max_jobs), rng.gen_range(1..=max_machines));
    random_instance(&mut rng, j, m, 9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zero_violation_iff_feasible(seed in any::<u64>()) {
        let inst = instance(seed, 4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let starts: Vec<u64> = if rng.gen_bool(0.5) {
            random_list_schedule(&inst, &mut rng).0
        } else {
            (0..inst.num_tasks()).map(|_| rng.gen_range(0..30)).collect()
        };
        let sched = Schedule::from_integers(jobshop_core::ScheduleKind::Exact, &starts);
        let report = violation_degrees(&inst, &sched).unwrap();
        prop_assert_eq!(report.is_zero(), feasible_int(&inst, &starts));
    }

    #[test]
    fn translation_shifts_makespan(seed in any::<u64>(), shift in 0u64..100) {
        let inst = instance(seed, 4, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let starts: Vec<f64> = (0..inst.num_tasks()).map(|_| rng.gen_range(0.0..40.0)).collect();
        let shifted: Vec<f64> = starts.iter().map(|s| s + shift as f64).collect();
        let d = inst.durations_f64();
        let (a, b) = (degrees_with(&inst, &d, &starts), degrees_with(&inst, &d, &shifted));
        for (x, y) in a.precedence.iter().chain(&a.overlap).zip(b.precedence.iter().chain(&b.overlap)) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        let m0 = makespan(&inst, &Schedule::predicted(starts).unwrap()).unwrap();
        let m1 = makespan(&inst, &Schedule::predicted(shifted).unwrap()).unwrap();
        prop_assert!((m1 - m0 - shift as f64).abs() < 1e-9);
    }

    #[test]
    fn exact_matches_enumeration_on_small_instances(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (j, m) = [(2, 2), (2, 3), (3, 2), (3, 3)][rng.gen_range(0..4)];
        let inst = random_instance(&mut rng, j, m, 9);
        let exact = solve_exact(&inst, 10.0).unwrap();
        prop_assert!(exact.proved_optimal);
        prop_assert_eq!(exact.makespan, brute_force_optimum(&inst).0);
        prop_assert!(feasible_int(&inst, &exact.starts()));
    }

    #[test]
    fn anytime_incumbents_feasible_and_improving(seed in any::<u64>()) {
        let inst = instance(seed, 6, 4);
        let opts = AnytimeOptions { max_iterations: Some(300), ..AnytimeOptions::default() };
        let result = solve_anytime_with(&inst, seed, &opts);
        prop_assert!(feasible_int(&inst, &result.starts()));
        prop_assert_eq!(makespan_of(&inst, &result.starts()), result.makespan);
        prop_assert!(result.trace.windows(2).all(|w| w[1].makespan < w[0].makespan));
        prop_assert_eq!(result.trace.last().unwrap().makespan, result.makespan);
    }

    #[test]
    fn dispatch_feasible_deterministic_and_bounded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (j, m) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let inst = random_instance(&mut rng, j, m, 9);
        let optimum = brute_force_optimum(&inst).0;
        for rule in DispatchRule::ALL {
            let a = dispatch(&inst, rule);
            prop_assert_eq!(&a, &dispatch(&inst, rule));
            let starts = a.integer_starts().unwrap();
            prop_assert!(feasible_int(&inst, &starts));
            prop_assert!(makespan_of(&inst, &starts) >= optimum);
        }
    }

    #[test]
    fn recovery_feasible_and_idempotent(seed in any::<u64>(), key in 0usize..3) {
        let key = [OrderingKey::HalfEnd, OrderingKey::Midpoint, OrderingKey::Start][key];
        let inst = instance(seed, 8, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hi = inst.total_work() as f64;
        let pred: Vec<f64> = (0..inst.num_tasks()).map(|_| rng.gen_range(-5.0..hi)).collect();
        let first = recover(&inst, &pred, key).unwrap().schedule;
        let (feasible, _) = check_feasible(&inst, &first).unwrap();
        prop_assert!(feasible);
        let again = recover(&inst, first.starts(), OrderingKey::Start).unwrap().schedule;
        let twice = recover(&inst, again.starts(), OrderingKey::Start).unwrap().schedule;
        prop_assert_eq!(again.starts(), twice.starts());
    }

    #[test]
    fn recovering_exact_optimum_keeps_makespan(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 3, 3, 9);
        let exact = solve_exact(&inst, 10.0).unwrap();
        let pred: Vec<f64> = exact.starts().iter().map(|&s| s as f64).collect();
        for key in [OrderingKey::HalfEnd, OrderingKey::Midpoint, OrderingKey::Start] {
            let out = recover(&inst, &pred, key).unwrap().schedule;
            prop_assert_eq!(makespan_of(&inst, &out.integer_starts().unwrap()), exact.makespan);
        }
    }

    #[test]
    fn jsplib_round_trip(seed in any::<u64>()) {
        let inst = instance(seed, 8, 6);
        prop_assert_eq!(parse_jsplib(&format_jsplib(&inst)).unwrap(), inst);
    }

    #[test]
    fn scaler_round_trip_and_deterministic_prediction(seed in any::<u64>()) {
        let inst = instance(seed, 4, 3);
        let arch = Architecture::jm(&inst, JmDepths::default());
        let model = Model { network: Network::init(arch, seed).unwrap(), scaler: Scaler::new(9.0, 60.0).unwrap() };
        let d = inst.durations();
        prop_assert_eq!(model.predict(d).unwrap(), model.predict(d).unwrap());
        let y = model.predict(d).unwrap();
        let back = model.scaler.unscale_output(&model.scaler.scale_output(&y));
        for (a, b) in y.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}

#[test]
fn jm_input_layer_is_sparser_than_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inst = random_instance(&mut rng, 50, 10, 99);
    let arch = Architecture::jm(&inst, JmDepths::default());
    let first_width: usize = arch.branches.iter().map(|b| b.widths[0]).sum();
    assert!(arch.input_connections() < inst.num_tasks() * first_width);
}

#[test]
fn dataset_generation_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let root = random_instance(&mut rng, 3, 3, 9);
    let spec = GenSpec {
        num_samples: 12,
        seed: 3,
        label_time_limit: 2.0,
        ..GenSpec::default()
    };
    let a = generate_dataset(&root, &spec).unwrap();
    let b = generate_dataset(&root, &spec).unwrap();
    let (mut wa, mut wb) = (Vec::new(), Vec::new());
    write_dataset_to(&a, &mut wa).unwrap();
    write_dataset_to(&b, &mut wb).unwrap();
    let strip = |bytes: &[u8]| -> Vec<String> {
        // Solve times are wall-clock measurements.
        String::from_utf8(bytes.to_vec())
            .unwrap()
            .lines()
            .map(|l| {
                let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
                v.as_object_mut().unwrap().remove("solve_seconds");
                v.to_string()
            })
            .collect()
    };
    assert_eq!(strip(&wa), strip(&wb));
    let back = read_dataset_from(wa.as_slice()).unwrap();
    assert_eq!(back, a);
}
