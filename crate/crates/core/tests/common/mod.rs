//! Helpers shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use stochdd::circuit::{Circuit, GateKind, GateOp};

/// Every gate kind with an operator matrix.
pub fn unitary_kinds() -> Vec<GateKind> {
    GateKind::ALL.into_iter().filter(|k| k.is_unitary()).collect()
}

/// A random gate over `n` qubits drawn from the full gate set, sometimes
/// with an extra control on single-target gates.
pub fn random_gate<R: Rng>(rng: &mut R, n: usize) -> GateOp {
    let kinds: Vec<GateKind> = unitary_kinds()
        .into_iter()
        .filter(|k| k.num_targets() + k.implied_controls() <= n)
        .collect();
    let kind = kinds[rng.random_range(0..kinds.len())];
    let mut qubits: Vec<usize> = (0..n).collect();
    qubits.shuffle(rng);
    let mut controls = kind.implied_controls();
    let targets = kind.num_targets();
    if kind.implied_controls() == 0 && targets == 1 && targets + 1 <= n && rng.random_bool(0.25) {
        controls += 1;
    }
    let params = (0..kind.num_params()).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
    GateOp::new(
        kind,
        params,
        qubits[..targets].to_vec(),
        qubits[targets..targets + controls].to_vec(),
    )
}

pub fn random_circuit<R: Rng>(rng: &mut R, n: usize, depth: usize) -> Circuit {
    let mut c = Circuit::new(format!("random_{n}x{depth}"), n);
    for _ in 0..depth {
        c.push(random_gate(rng, n));
    }
    c
}
