mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stochdd::dd::{index_to_bits, Package};
use stochdd::noise::{insert_noise, InsertionPolicy, NoiseSpec};
use stochdd::oracle::dense_run;
use stochdd::sampler::{hoeffding_halfwidth, plan_samples, run_once, PropertySpec};

fn spec_strategy() -> impl Strategy<Value = NoiseSpec> {
    (0.0..0.5f64, 0.0..0.5f64, 0.0..0.5f64, any::<bool>()).prop_map(|(d, a, f, all)| NoiseSpec {
        p_depol: d,
        p_damp: a,
        p_flip: f,
        policy: if all {
            InsertionPolicy::AllQubitsPerStep
        } else {
            InsertionPolicy::OperandsOnly
        },
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn noiseless_dd_matches_dense(seed in any::<u64>(), n in 1usize..6, depth in 0usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = common::random_circuit(&mut rng, n, depth);
        let dense = dense_run(&c).unwrap();
        let mut pkg = Package::new();
        let mut s = pkg.make_zero_state(n).unwrap();
        for op in &c.ops {
            let m = pkg.gate_matrix(op, n).unwrap();
            s = pkg.apply_matrix(&m, &s).unwrap();
            prop_assert!(pkg.is_normalized(&s));
        }
        for (a, b) in pkg.to_amplitudes(&s).iter().zip(&dense.amplitudes) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn noise_preserves_the_norm(seed in any::<u64>(), n in 1usize..5, spec in spec_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = common::random_circuit(&mut rng, n, 8);
        let mut pkg = Package::new();
        let mut s = pkg.make_zero_state(n).unwrap();
        for (i, op) in c.ops.iter().enumerate() {
            let m = pkg.gate_matrix(op, n).unwrap();
            s = pkg.apply_matrix(&m, &s).unwrap();
            let (next, _) = insert_noise(&mut pkg, &s, op, i, &spec, &mut rng).unwrap();
            s = next;
            prop_assert!((pkg.norm_squared(&s) - 1.0).abs() < 1e-9);
            prop_assert!(pkg.is_normalized(&s));
        }
    }

    #[test]
    fn run_values_are_probabilities(seed in any::<u64>(), n in 1usize..4, spec in spec_strategy(), run in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = common::random_circuit(&mut rng, n, 6);
        let mut props: Vec<PropertySpec> = (0..1usize << n).map(|i| PropertySpec::basis(&index_to_bits(i, n))).collect();
        props.push(PropertySpec::ideal_fidelity(&c));
        let r = run_once(&c, &spec, &props, run, seed).unwrap();
        prop_assert_eq!(r.measured_bits.len(), n);
        for v in &r.property_values {
            prop_assert!((-1e-12..=1.0 + 1e-9).contains(v));
        }
        let total: f64 = r.property_values[..1 << n].iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        // Same inputs, same run.
        prop_assert_eq!(run_once(&c, &spec, &props, run, seed).unwrap(), r);
    }

    #[test]
    fn plan_is_monotone(l in 1usize..5000, eps in 0.005..0.5f64, delta in 0.001..0.5f64) {
        let base = plan_samples(l, eps, delta).unwrap().num_runs;
        prop_assert!(plan_samples(l + 1, eps, delta).unwrap().num_runs >= base);
        prop_assert!(plan_samples(l, eps * 1.1, delta).unwrap().num_runs <= base);
        prop_assert!(plan_samples(l, eps, delta * 0.9).unwrap().num_runs >= base);
        // At the planned M the Hoeffding half-width is sqrt(2) * eps, up to the ceiling.
        let hw = hoeffding_halfwidth(l, delta, base);
        prop_assert!(hw <= 2f64.sqrt() * eps * (1.0 + 1e-12));
    }
}
