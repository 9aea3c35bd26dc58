//! Stochastic error channels applied to decision-diagram states.
//!
//! Every channel consumes uniform draws from the caller's random stream in a
//! fixed order, so a trajectory is fully determined by the input state, the
//! noise parameters and the stream:
//!
//! - depolarizing: one `f64` for the error event; if it fires, one integer
//!   in `0..4` selecting I, X, Y or Z;
//! - amplitude damping: one `f64` compared against the damped-branch weight;
//! - phase flip: one `f64` for the flip event.
//!
//! A channel whose probability is exactly 0 draws nothing.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{GateKind, GateOp};
use crate::dd::{Complex, MatrixDD, Package, StateDD};
use crate::error::{Error, Result};

const PROBABILITY_SLACK: f64 = 1e-9;

/// Which qubits receive noise after a gate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum InsertionPolicy {
    /// All three channels on each operand (targets then controls) of the gate.
    #[default]
    OperandsOnly,
    /// Depolarizing on the operands; damping and phase flip on every qubit.
    AllQubitsPerStep,
    /// All three channels only at the listed (gate index, qubit) sites.
    Sites(Vec<NoiseSite>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseSite {
    pub op_index: usize,
    pub qubit: usize,
}

/// Error probabilities and where to apply them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub p_depol: f64,
    pub p_damp: f64,
    pub p_flip: f64,
    pub policy: InsertionPolicy,
}

impl Default for NoiseSpec {
    /// 0.1 % depolarizing, 0.2 % amplitude damping, 0.1 % phase flip.
    fn default() -> Self {
        NoiseSpec {
            p_depol: 0.001,
            p_damp: 0.002,
            p_flip: 0.001,
            policy: InsertionPolicy::OperandsOnly,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    Depolarizing,
    AmplitudeDamping,
    PhaseFlip,
}

/// One channel application scheduled after a gate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelStep {
    pub channel: Channel,
    pub qubit: usize,
    pub p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn gate_kind(self) -> GateKind {
        match self {
            Pauli::I => GateKind::I,
            Pauli::X => GateKind::X,
            Pauli::Y => GateKind::Y,
            Pauli::Z => GateKind::Z,
        }
    }
}

/// An error that fired during a channel application.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseEvent {
    Depolarized(Pauli),
    Damped,
    PhaseFlipped,
}

/// Result of one channel application.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelOutcome {
    pub state: StateDD,
    pub event: Option<NoiseEvent>,
}

impl ChannelOutcome {
    fn quiet(state: StateDD) -> Self {
        ChannelOutcome { state, event: None }
    }
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        NoiseSpec {
            p_depol: 0.0,
            p_damp: 0.0,
            p_flip: 0.0,
            policy: InsertionPolicy::OperandsOnly,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_depol", self.p_depol), ("p_damp", self.p_damp), ("p_flip", self.p_flip)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p_depol == 0.0 && self.p_damp == 0.0 && self.p_flip == 0.0
    }

    /// Channel applications that follow gate number `op_index`, in order.
    /// Zero-probability steps are omitted.
    pub fn schedule(&self, gate: &GateOp, op_index: usize, num_qubits: usize) -> Vec<ChannelStep> {
        let mut steps = Vec::new();
        if !gate.kind.is_unitary() {
            return steps;
        }
        let mut push = |channel, qubit, p: f64| {
            if p > 0.0 {
                steps.push(ChannelStep { channel, qubit, p });
            }
        };
        match &self.policy {
            InsertionPolicy::OperandsOnly => {
                for q in gate.operands() {
                    push(Channel::Depolarizing, q, self.p_depol);
                    push(Channel::AmplitudeDamping, q, self.p_damp);
                    push(Channel::PhaseFlip, q, self.p_flip);
                }
            }
            InsertionPolicy::AllQubitsPerStep => {
                for q in gate.operands() {
                    push(Channel::Depolarizing, q, self.p_depol);
                }
                for q in 0..num_qubits {
                    push(Channel::AmplitudeDamping, q, self.p_damp);
                    push(Channel::PhaseFlip, q, self.p_flip);
                }
            }
            InsertionPolicy::Sites(sites) => {
                for site in sites.iter().filter(|s| s.op_index == op_index) {
                    push(Channel::Depolarizing, site.qubit, self.p_depol);
                    push(Channel::AmplitudeDamping, site.qubit, self.p_damp);
                    push(Channel::PhaseFlip, site.qubit, self.p_flip);
                }
            }
        }
        steps
    }
}

fn check_args(state: &StateDD, qubit: usize, p: f64) -> Result<()> {
    if qubit >= state.num_qubits {
        return Err(Error::InvalidArgument(format!(
            "qubit {qubit} out of range for {} qubits",
            state.num_qubits
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("{p} is not a probability")));
    }
    Ok(())
}

fn apply_single(pkg: &mut Package, state: &StateDD, kind: GateKind, qubit: usize) -> Result<StateDD> {
    let op = pkg.gate_matrix(&GateOp::single(kind, qubit), state.num_qubits)?;
    pkg.apply_matrix(&op, state)
}

/// With probability `p`, applies a uniformly drawn Pauli (I, X, Y or Z).
pub fn apply_depolarizing<R: Rng + ?Sized>(
    pkg: &mut Package,
    state: &StateDD,
    qubit: usize,
    p: f64,
    rng: &mut R,
) -> Result<ChannelOutcome> {
    check_args(state, qubit, p)?;
    if p == 0.0 || rng.random::<f64>() >= p {
        return Ok(ChannelOutcome::quiet(*state));
    }
    let pauli = Pauli::ALL[rng.random_range(0..4)];
    let next = match pauli {
        Pauli::I => *state,
        other => apply_single(pkg, state, other.gate_kind(), qubit)?,
    };
    Ok(ChannelOutcome {
        state: next,
        event: Some(NoiseEvent::Depolarized(pauli)),
    })
}

/// With probability `p`, applies Z.
pub fn apply_phase_flip<R: Rng + ?Sized>(
    pkg: &mut Package,
    state: &StateDD,
    qubit: usize,
    p: f64,
    rng: &mut R,
) -> Result<ChannelOutcome> {
    check_args(state, qubit, p)?;
    if p == 0.0 || rng.random::<f64>() >= p {
        return Ok(ChannelOutcome::quiet(*state));
    }
    Ok(ChannelOutcome {
        state: apply_single(pkg, state, GateKind::Z, qubit)?,
        event: Some(NoiseEvent::PhaseFlipped),
    })
}

/// Damping factors embedded at one qubit.
///
/// `a0 = [[0, sqrt(p)], [0, 0]]` moves |1> to |0> (the decay branch) and
/// `a1 = [[1, 0], [0, sqrt(1-p)]]` is the no-decay branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrausPair {
    pub a0: MatrixDD,
    pub a1: MatrixDD,
}

pub fn damping_kraus_pair(pkg: &mut Package, num_qubits: usize, qubit: usize, p: f64) -> Result<KrausPair> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("{p} is not a probability")));
    }
    let z = Complex::new(0.0, 0.0);
    let a0 = [z, Complex::new(p.sqrt(), 0.0), z, z];
    let a1 = [Complex::new(1.0, 0.0), z, z, Complex::new((1.0 - p).sqrt(), 0.0)];
    Ok(KrausPair {
        a0: pkg.local_operator(num_qubits, &[qubit], &a0)?,
        a1: pkg.local_operator(num_qubits, &[qubit], &a1)?,
    })
}

/// State-dependent amplitude damping.
///
/// The decay branch is taken with probability `s0 = ||a0 psi||^2` and the
/// chosen branch is renormalized.
pub fn apply_amplitude_damping<R: Rng + ?Sized>(
    pkg: &mut Package,
    state: &StateDD,
    qubit: usize,
    p: f64,
    rng: &mut R,
) -> Result<ChannelOutcome> {
    check_args(state, qubit, p)?;
    if p == 0.0 {
        return Ok(ChannelOutcome::quiet(*state));
    }
    let norm = pkg.norm_squared(state);
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::NumericDegeneracy(format!(
            "amplitude damping needs a normalized state, squared norm is {norm}"
        )));
    }
    // ||a0 psi||^2 = p * P(qubit = 1), so the decay branch is only built
    // when it is taken.
    let s0 = p * pkg.qubit_one_probability(state, qubit)? / norm;
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&s0) {
        return Err(Error::NumericDegeneracy(format!("damping branch weight {s0} outside [0, 1]")));
    }
    let s0 = s0.clamp(0.0, 1.0);
    let kraus = damping_kraus_pair(pkg, state.num_qubits, qubit, p)?;
    if rng.random::<f64>() < s0 {
        let decayed = pkg.apply_matrix(&kraus.a0, state)?;
        let next = pkg.scale(&decayed, Complex::new(1.0 / (s0 * norm).sqrt(), 0.0));
        return Ok(ChannelOutcome {
            state: next,
            event: Some(NoiseEvent::Damped),
        });
    }
    if s0 == 0.0 {
        return Ok(ChannelOutcome::quiet(*state));
    }
    let survivor = pkg.apply_matrix(&kraus.a1, state)?;
    let next = pkg.scale(&survivor, Complex::new(1.0 / ((1.0 - s0) * norm).sqrt(), 0.0));
    Ok(ChannelOutcome::quiet(next))
}

pub fn apply_channel<R: Rng + ?Sized>(
    pkg: &mut Package,
    state: &StateDD,
    step: &ChannelStep,
    rng: &mut R,
) -> Result<ChannelOutcome> {
    match step.channel {
        Channel::Depolarizing => apply_depolarizing(pkg, state, step.qubit, step.p, rng),
        Channel::AmplitudeDamping => apply_amplitude_damping(pkg, state, step.qubit, step.p, rng),
        Channel::PhaseFlip => apply_phase_flip(pkg, state, step.qubit, step.p, rng),
    }
}

/// Applies the noise scheduled after gate `op_index` (which must already
/// have been applied to `state`). Returns the new state and the number of
/// error events that fired.
pub fn insert_noise<R: Rng + ?Sized>(
    pkg: &mut Package,
    state: &StateDD,
    gate: &GateOp,
    op_index: usize,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<(StateDD, usize)> {
    let mut current = *state;
    let mut events = 0;
    for step in spec.schedule(gate, op_index, state.num_qubits) {
        let outcome = apply_channel(pkg, &current, &step, rng)?;
        current = outcome.state;
        events += outcome.event.is_some() as usize;
    }
    Ok((current, events))
}
