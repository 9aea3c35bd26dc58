use std::f64::consts::PI;

use super::{Circuit, GateKind, GateOp};
use crate::error::{Error, Result};

/// Entanglement benchmark: H on q0, then a CX ladder q0->q1->...->q(n-1).
pub fn generate_ghz(num_qubits: usize) -> Result<Circuit> {
    if num_qubits == 0 {
        return Err(Error::InvalidArgument("GHZ circuit needs at least one qubit".into()));
    }
    let mut c = Circuit::new(format!("ghz_{num_qubits}"), num_qubits);
    c.push(GateOp::single(GateKind::H, 0));
    for q in 1..num_qubits {
        c.push(GateOp::cx(q - 1, q));
    }
    Ok(c)
}

/// Textbook quantum Fourier transform with q0 as the most significant qubit.
///
/// For each qubit k: H, then controlled-PHASE(pi / 2^(j-k)) controlled by
/// every j > k. A final SWAP layer reverses the qubit order.
pub fn generate_qft(num_qubits: usize) -> Result<Circuit> {
    if num_qubits == 0 {
        return Err(Error::InvalidArgument("QFT circuit needs at least one qubit".into()));
    }
    let mut c = Circuit::new(format!("qft_{num_qubits}"), num_qubits);
    for k in 0..num_qubits {
        c.push(GateOp::single(GateKind::H, k));
        for j in k + 1..num_qubits {
            let angle = PI / (1u64 << (j - k)) as f64;
            c.push(GateOp::controlled_phase(angle, j, k));
        }
    }
    for k in 0..num_qubits / 2 {
        c.push(GateOp::swap(k, num_qubits - 1 - k));
    }
    Ok(c)
}
