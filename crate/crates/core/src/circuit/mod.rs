//! Circuit representation, benchmark generators and the OpenQASM 2.0 front end.

mod emit;
mod gate;
mod generators;
mod qasm;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use emit::emit_qasm;
pub use gate::{GateKind, GateOp, Matrix2};
pub use generators::{generate_ghz, generate_qft};
pub use qasm::{parse_qasm, parse_qasm_with_notes};

/// Ordered list of gate applications over `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub name: String,
    pub num_qubits: usize,
    pub ops: Vec<GateOp>,
}

/// One problem found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub op_index: usize,
    pub kind: IssueKind,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IssueKind {
    OutOfBounds,
    Overlap,
    Arity,
    MidCircuitMeasure,
    EmptyRegister,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "op {}: {}", self.op_index, self.message)
    }
}

impl Circuit {
    pub fn new(name: impl Into<String>, num_qubits: usize) -> Self {
        Circuit {
            name: name.into(),
            num_qubits,
            ops: Vec::new(),
        }
    }

    pub fn push(&mut self, op: GateOp) -> &mut Self {
        self.ops.push(op);
        self
    }

    /// Gates that act on the state (measurements and barriers excluded).
    pub fn unitary_ops(&self) -> impl Iterator<Item = &GateOp> {
        self.ops.iter().filter(|op| op.kind.is_unitary())
    }

    /// Runs [`validate`] and converts the issue list into an error.
    pub fn check(&self) -> Result<()> {
        validate(self).map_err(Error::Validation)
    }
}

/// Checks index bounds, operand overlap, parameter/operand arity and the
/// trailing-measurement rule. Returns every violation found.
pub fn validate(circuit: &Circuit) -> std::result::Result<(), Vec<ValidationIssue>> {
    let n = circuit.num_qubits;
    let mut issues = Vec::new();
    if n == 0 {
        issues.push(ValidationIssue {
            op_index: 0,
            kind: IssueKind::EmptyRegister,
            message: "circuit has no qubits".into(),
        });
    }
    let mut seen_measure = false;
    for (i, op) in circuit.ops.iter().enumerate() {
        let mut push = |kind, message: String| {
            issues.push(ValidationIssue {
                op_index: i,
                kind,
                message,
            })
        };
        let kind = op.kind;
        if op.params.len() != kind.num_params() {
            push(
                IssueKind::Arity,
                format!("`{kind}` takes {} parameter(s), got {}", kind.num_params(), op.params.len()),
            );
        }
        if kind == GateKind::Barrier {
            if !op.controls.is_empty() {
                push(IssueKind::Arity, "barrier takes no controls".into());
            }
        } else if op.targets.len() != kind.num_targets() {
            push(
                IssueKind::Arity,
                format!("`{kind}` takes {} target(s), got {}", kind.num_targets(), op.targets.len()),
            );
        }
        let implied = kind.implied_controls();
        if implied > 0 && op.controls.len() != implied {
            push(
                IssueKind::Arity,
                format!("`{kind}` takes {implied} control(s), got {}", op.controls.len()),
            );
        }
        if kind == GateKind::Measure && !op.controls.is_empty() {
            push(IssueKind::Arity, "measure takes no controls".into());
        }
        for q in op.operands() {
            if q >= n {
                push(IssueKind::OutOfBounds, format!("qubit {q} out of range for {n} qubits"));
            }
        }
        let mut operands: Vec<usize> = op.operands().collect();
        operands.sort_unstable();
        if operands.windows(2).any(|w| w[0] == w[1]) {
            push(IssueKind::Overlap, format!("`{op}` uses a qubit more than once"));
        }
        match kind {
            GateKind::Measure => seen_measure = true,
            GateKind::Barrier => {}
            _ if seen_measure => push(
                IssueKind::MidCircuitMeasure,
                format!("`{op}` follows a measurement; only trailing measurements are supported"),
            ),
            _ => {}
        }
    }
    if issues.is_empty() {
        Ok(())
    } else {
        Err(issues)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ghz_is_valid() {
        assert_eq!(validate(&generate_ghz(5).unwrap()), Ok(()));
    }

    #[test]
    fn self_controlled_cx_is_an_overlap() {
        let mut c = Circuit::new("bad", 2);
        c.push(GateOp::cx(0, 0));
        let issues = validate(&c).unwrap_err();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].kind, IssueKind::Overlap);
    }

    #[test]
    fn out_of_range_target_is_reported() {
        let mut c = Circuit::new("bad", 3);
        c.push(GateOp::single(GateKind::X, 5));
        let issues = validate(&c).unwrap_err();
        assert_eq!(issues[0].kind, IssueKind::OutOfBounds);
        assert_eq!(issues[0].op_index, 0);
    }

    #[test]
    fn all_violations_are_collected() {
        let mut c = Circuit::new("bad", 2);
        c.push(GateOp::new(GateKind::RZ, vec![], vec![0], vec![]));
        c.push(GateOp::single(GateKind::H, 7));
        c.push(GateOp::new(GateKind::CX, vec![], vec![1], vec![]));
        let kinds: Vec<_> = validate(&c).unwrap_err().into_iter().map(|i| (i.op_index, i.kind)).collect();
        assert_eq!(
            kinds,
            vec![(0, IssueKind::Arity), (1, IssueKind::OutOfBounds), (2, IssueKind::Arity)]
        );
    }

    #[test]
    fn measurement_must_be_trailing() {
        let mut c = Circuit::new("mid", 2);
        c.push(GateOp::single(GateKind::H, 0));
        c.push(GateOp::single(GateKind::Measure, 0));
        c.push(GateOp::new(GateKind::Barrier, vec![], vec![], vec![]));
        c.push(GateOp::single(GateKind::Measure, 1));
        assert!(validate(&c).is_ok());
        c.push(GateOp::single(GateKind::X, 1));
        let issues = validate(&c).unwrap_err();
        assert_eq!(issues[0].kind, IssueKind::MidCircuitMeasure);
        assert_eq!(issues[0].op_index, 4);
    }

    #[test]
    fn check_wraps_issues_in_an_error() {
        let mut c = Circuit::new("bad", 1);
        c.push(GateOp::single(GateKind::X, 1));
        assert!(matches!(c.check(), Err(Error::Validation(v)) if v.len() == 1));
    }
}
