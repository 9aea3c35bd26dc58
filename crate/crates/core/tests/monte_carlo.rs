//! Sampled estimates against the exact branch-enumeration oracle.

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stochdd::circuit::{generate_ghz, Circuit, GateKind, GateOp};
use stochdd::dd::index_to_bits;
use stochdd::noise::{InsertionPolicy, NoiseSite, NoiseSpec};
use stochdd::oracle::{dense_channel_average, dense_expected_overlap, dense_run};
use stochdd::sampler::{plan_samples, run_ensemble, PropertySpec};

const RUNS: u64 = 20_000;

/// Estimates every basis probability and the ideal fidelity, and checks each
/// against the oracle within three standard errors of the exact value.
fn check_fixture(name: &str, circuit: &Circuit, spec: &NoiseSpec, seed: u64) {
    let n = circuit.num_qubits;
    let exact = dense_channel_average(circuit, spec).unwrap();
    assert!((exact.iter().sum::<f64>() - 1.0).abs() < 1e-9, "{name}: oracle mass");

    let mut props: Vec<PropertySpec> = (0..1usize << n).map(|i| PropertySpec::basis(&index_to_bits(i, n))).collect();
    props.push(PropertySpec::ideal_fidelity(circuit));
    let plan = plan_samples(props.len(), 0.05, 0.05).unwrap().with_runs(RUNS).unwrap();
    let agg = run_ensemble(circuit, spec, &plan, &props, 2, seed).unwrap();

    for (i, p) in exact.iter().enumerate() {
        let est = agg.estimates[i].mean;
        let sigma = (p * (1.0 - p) / RUNS as f64).sqrt();
        assert!(
            (est - p).abs() <= 3.0 * sigma + 1e-12,
            "{name}: {} estimated {est}, exact {p} (sigma {sigma})",
            agg.estimates[i].label
        );
    }

    let ideal = dense_run(circuit).unwrap();
    let fidelity = dense_expected_overlap(circuit, spec, &ideal).unwrap();
    let est = agg.estimates[1 << n].mean;
    let stderr = agg.estimates[1 << n].stderr.unwrap();
    assert!(
        (est - fidelity).abs() <= 3.0 * stderr + 1e-12,
        "{name}: fidelity estimated {est}, exact {fidelity} (stderr {stderr})"
    );

    // The measured histogram samples the same distribution.
    for (i, p) in exact.iter().enumerate() {
        let bits: String = index_to_bits(i, n).iter().map(|&b| if b { '1' } else { '0' }).collect();
        let freq = *agg.histogram.get(&bits).unwrap_or(&0) as f64 / RUNS as f64;
        let sigma = (p * (1.0 - p) / RUNS as f64).sqrt();
        assert!((freq - p).abs() <= 3.0 * sigma + 1e-12, "{name}: frequency of {bits} is {freq}, exact {p}");
    }
}

fn at(op_index: usize, qubit: usize) -> InsertionPolicy {
    InsertionPolicy::Sites(vec![NoiseSite { op_index, qubit }])
}

#[test]
fn bell_with_depolarizing_on_q0() {
    let spec = NoiseSpec {
        p_depol: 0.2,
        p_damp: 0.0,
        p_flip: 0.0,
        policy: at(1, 0),
    };
    check_fixture("bell/depol", &generate_ghz(2).unwrap(), &spec, 1);
}

#[test]
fn bell_with_damping_on_q0() {
    let spec = NoiseSpec {
        p_depol: 0.0,
        p_damp: 0.3,
        p_flip: 0.0,
        policy: at(1, 0),
    };
    check_fixture("bell/damp", &generate_ghz(2).unwrap(), &spec, 2);
}

#[test]
fn ghz3_with_all_channels() {
    let spec = NoiseSpec {
        p_depol: 0.05,
        p_damp: 0.1,
        p_flip: 0.05,
        policy: InsertionPolicy::OperandsOnly,
    };
    check_fixture("ghz3/all", &generate_ghz(3).unwrap(), &spec, 3);
}

#[test]
fn random_three_qubit_circuits_with_damping_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let spec = NoiseSpec {
        p_depol: 0.0,
        p_damp: 0.15,
        p_flip: 0.0,
        policy: InsertionPolicy::AllQubitsPerStep,
    };
    for k in 0..3 {
        let c = common::random_circuit(&mut rng, 3, 6);
        check_fixture(&format!("random3/{k}"), &c, &spec, 10 + k);
    }
}

#[test]
fn four_qubit_circuit_with_flips_and_damping() {
    let mut c = Circuit::new("entangle4", 4);
    c.push(GateOp::single(GateKind::H, 0))
        .push(GateOp::cx(0, 1))
        .push(GateOp::cx(1, 2))
        .push(GateOp::cx(2, 3))
        .push(GateOp::rotation(GateKind::RY, 0.7, 3))
        .push(GateOp::single(GateKind::H, 1));
    let spec = NoiseSpec {
        p_depol: 0.0,
        p_damp: 0.1,
        p_flip: 0.1,
        policy: InsertionPolicy::OperandsOnly,
    };
    check_fixture("entangle4", &c, &spec, 4);
}

#[test]
fn random_two_qubit_circuits_with_depolarizing() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = NoiseSpec {
        p_depol: 0.1,
        p_damp: 0.0,
        p_flip: 0.0,
        policy: InsertionPolicy::AllQubitsPerStep,
    };
    for k in 0..2 {
        let c = common::random_circuit(&mut rng, 2, 6);
        check_fixture(&format!("random2/{k}"), &c, &spec, 20 + k);
    }
}
