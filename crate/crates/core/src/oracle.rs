//! Dense state-vector reference simulator for small registers.
//!
//! Used to cross-check the decision-diagram engine and the Monte-Carlo
//! estimates. [`dense_channel_average`] computes the exact noisy output
//! distribution by enumerating every error branch with its probability.

use num_complex::Complex64;

use crate::circuit::{Circuit, GateKind, GateOp};
use crate::dd::Package;
use crate::error::{Error, Result};
use crate::noise::{Channel, ChannelStep, NoiseSpec};

/// Largest register [`dense_apply`] accepts.
pub const MAX_DENSE_QUBITS: usize = 20;

/// Default cap on the number of enumerated noise branches.
pub const DEFAULT_BRANCH_CAP: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    pub amplitudes: Vec<Complex64>,
    pub num_qubits: usize,
}

impl DenseState {
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidArgument("a state needs at least one qubit".into()));
        }
        if num_qubits > MAX_DENSE_QUBITS {
            return Err(Error::ResourceLimit(format!(
                "dense simulation limited to {MAX_DENSE_QUBITS} qubits, got {num_qubits}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(DenseState { amplitudes, num_qubits })
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero(num_qubits)?;
        if index >= s.amplitudes.len() {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range")));
        }
        s.amplitudes[0] = Complex64::new(0.0, 0.0);
        s.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &DenseState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn bit(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    /// Applies a 2x2 matrix to `target` on the subspace where every control is 1.
    fn apply_controlled(&mut self, m: &[[Complex64; 2]; 2], target: usize, controls: &[usize]) {
        let tbit = self.bit(target);
        let cmask: usize = controls.iter().map(|&c| self.bit(c)).sum();
        for i in 0..self.amplitudes.len() {
            if i & tbit != 0 || i & cmask != cmask {
                continue;
            }
            let j = i | tbit;
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
            self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    fn scale(&mut self, c: f64) {
        for a in &mut self.amplitudes {
            *a *= c;
        }
    }
}

fn check_gate(gate: &GateOp, n: usize) -> Result<()> {
    if let Some(q) = gate.operands().find(|&q| q >= n) {
        return Err(Error::InvalidArgument(format!("qubit {q} out of range for {n} qubits")));
    }
    if gate.params.len() != gate.kind.num_params() {
        return Err(Error::InvalidArgument(format!("`{}` has the wrong number of parameters", gate.kind)));
    }
    Ok(())
}

/// Applies one gate by direct index manipulation. Measurements and barriers
/// leave the state unchanged.
pub fn dense_apply(gate: &GateOp, state: &DenseState) -> Result<DenseState> {
    let n = state.num_qubits;
    if n > MAX_DENSE_QUBITS {
        return Err(Error::ResourceLimit(format!(
            "dense simulation limited to {MAX_DENSE_QUBITS} qubits, got {n}"
        )));
    }
    check_gate(gate, n)?;
    let mut out = state.clone();
    match gate.kind {
        GateKind::Measure | GateKind::Barrier => {}
        GateKind::Swap => {
            let (a, b) = (out.bit(gate.targets[0]), out.bit(gate.targets[1]));
            let cmask: usize = gate.controls.iter().map(|&c| out.bit(c)).sum();
            for i in 0..out.amplitudes.len() {
                if i & a != 0 && i & b == 0 && i & cmask == cmask {
                    out.amplitudes.swap(i, (i & !a) | b);
                }
            }
        }
        kind => {
            let m = kind
                .target_matrix(&gate.params)
                .ok_or_else(|| Error::UnsupportedGate(kind.to_string()))?;
            out.apply_controlled(&m, gate.targets[0], &gate.controls);
        }
    }
    Ok(out)
}

/// Noiseless final state of `circuit` from |0...0>.
pub fn dense_run(circuit: &Circuit) -> Result<DenseState> {
    let mut s = DenseState::zero(circuit.num_qubits)?;
    for op in &circuit.ops {
        s = dense_apply(op, &s)?;
    }
    Ok(s)
}

/// Full circuit unitary as a row-major matrix, built column by column.
pub fn dense_unitary(circuit: &Circuit) -> Result<Vec<Complex64>> {
    let n = circuit.num_qubits;
    if n > 12 {
        return Err(Error::ResourceLimit(format!("dense unitary limited to 12 qubits, got {n}")));
    }
    let dim = 1usize << n;
    let mut u = vec![Complex64::new(0.0, 0.0); dim * dim];
    for col in 0..dim {
        let mut s = DenseState::basis(n, col)?;
        for op in &circuit.ops {
            s = dense_apply(op, &s)?;
        }
        for row in 0..dim {
            u[row * dim + col] = s.amplitudes[row];
        }
    }
    Ok(u)
}

fn single(kind: GateKind, qubit: usize, state: &DenseState) -> DenseState {
    let mut out = state.clone();
    let m = kind.target_matrix(&[]).expect("Pauli matrices are defined");
    out.apply_controlled(&m, qubit, &[]);
    out
}

/// Visits every leaf of the noise-branch tree of `circuit` with its
/// probability and final state. Depolarizing splits into five branches
/// (no error, I, X, Y, Z), phase flip into two, and amplitude damping into
/// the two state-dependent Kraus branches.
pub fn for_each_branch(
    circuit: &Circuit,
    spec: &NoiseSpec,
    branch_cap: u64,
    visit: &mut dyn FnMut(f64, &DenseState),
) -> Result<u64> {
    spec.validate()?;
    let n = circuit.num_qubits;
    let schedule: Vec<(usize, Vec<ChannelStep>)> = circuit
        .ops
        .iter()
        .enumerate()
        .map(|(i, op)| (i, spec.schedule(op, i, n)))
        .collect();
    let mut leaves = 0u64;
    let start = DenseState::zero(n)?;
    walk(circuit, &schedule, 0, 0, 1.0, start, branch_cap, &mut leaves, visit)?;
    Ok(leaves)
}

#[allow(clippy::too_many_arguments)]
fn walk(
    circuit: &Circuit,
    schedule: &[(usize, Vec<ChannelStep>)],
    op: usize,
    step: usize,
    prob: f64,
    state: DenseState,
    cap: u64,
    leaves: &mut u64,
    visit: &mut dyn FnMut(f64, &DenseState),
) -> Result<()> {
    if op == circuit.ops.len() {
        *leaves += 1;
        if *leaves > cap {
            return Err(Error::ResourceLimit(format!("more than {cap} noise branches")));
        }
        visit(prob, &state);
        return Ok(());
    }
    // step 0 means "apply the gate itself", step k > 0 the (k-1)-th channel.
    if step == 0 {
        let next = dense_apply(&circuit.ops[op], &state)?;
        return walk(circuit, schedule, op, 1, prob, next, cap, leaves, visit);
    }
    let steps = &schedule[op].1;
    if step > steps.len() {
        return walk(circuit, schedule, op + 1, 0, prob, state, cap, leaves, visit);
    }
    let ChannelStep { channel, qubit, p } = steps[step - 1];
    let mut go = |w: f64, s: DenseState, leaves: &mut u64| -> Result<()> {
        if w > 0.0 {
            walk(circuit, schedule, op, step + 1, prob * w, s, cap, leaves, visit)
        } else {
            Ok(())
        }
    };
    match channel {
        Channel::Depolarizing => {
            go(1.0 - p, state.clone(), leaves)?;
            go(p / 4.0, state.clone(), leaves)?;
            for kind in [GateKind::X, GateKind::Y, GateKind::Z] {
                go(p / 4.0, single(kind, qubit, &state), leaves)?;
            }
        }
        Channel::PhaseFlip => {
            go(1.0 - p, state.clone(), leaves)?;
            go(p, single(GateKind::Z, qubit, &state), leaves)?;
        }
        Channel::AmplitudeDamping => {
            let z = Complex64::new(0.0, 0.0);
            let decay = [[z, Complex64::new(p.sqrt(), 0.0)], [z, z]];
            let keep = [[Complex64::new(1.0, 0.0), z], [z, Complex64::new((1.0 - p).sqrt(), 0.0)]];
            let mut damped = state.clone();
            damped.apply_controlled(&decay, qubit, &[]);
            let s0 = damped.norm_squared().clamp(0.0, 1.0);
            if s0 > 0.0 {
                damped.scale(1.0 / s0.sqrt());
                go(s0, damped, leaves)?;
            }
            if s0 < 1.0 {
                let mut kept = state;
                kept.apply_controlled(&keep, qubit, &[]);
                kept.scale(1.0 / (1.0 - s0).sqrt());
                go(1.0 - s0, kept, leaves)?;
            }
        }
    }
    Ok(())
}

/// Exact outcome distribution over the `2^n` basis states of the noisy
/// circuit, indexed with q0 as the most significant bit.
pub fn dense_channel_average(circuit: &Circuit, spec: &NoiseSpec) -> Result<Vec<f64>> {
    dense_channel_average_capped(circuit, spec, DEFAULT_BRANCH_CAP)
}

pub fn dense_channel_average_capped(circuit: &Circuit, spec: &NoiseSpec, branch_cap: u64) -> Result<Vec<f64>> {
    let mut dist = vec![0.0; 1usize << circuit.num_qubits];
    for_each_branch(circuit, spec, branch_cap, &mut |p, s| {
        for (d, a) in dist.iter_mut().zip(&s.amplitudes) {
            *d += p * a.norm_sqr();
        }
    })?;
    Ok(dist)
}

/// Exact ensemble value of `|<omega|psi>|^2`.
pub fn dense_expected_overlap(circuit: &Circuit, spec: &NoiseSpec, omega: &DenseState) -> Result<f64> {
    let mut total = 0.0;
    for_each_branch(circuit, spec, DEFAULT_BRANCH_CAP, &mut |p, s| {
        total += p * omega.inner(s).norm_sqr();
    })?;
    Ok(total)
}

/// Largest elementwise difference between the noiseless decision-diagram
/// output of `circuit` and the dense reference.
pub fn max_amplitude_deviation(circuit: &Circuit) -> Result<f64> {
    circuit.check()?;
    let dense = dense_run(circuit)?;
    let n = circuit.num_qubits;
    let mut pkg = Package::new();
    let mut s = pkg.make_zero_state(n)?;
    for op in circuit.unitary_ops() {
        let m = pkg.gate_matrix(op, n)?;
        s = pkg.apply_matrix(&m, &s)?;
    }
    Ok(pkg
        .to_amplitudes(&s)
        .iter()
        .zip(&dense.amplitudes)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}
