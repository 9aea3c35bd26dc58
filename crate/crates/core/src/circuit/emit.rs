use std::fmt::Write;

use super::{Circuit, GateKind, GateOp};
use crate::error::{Error, Result};

fn qasm_name(op: &GateOp) -> Option<&'static str> {
    use GateKind::*;
    let extra = op.controls.len() - op.kind.implied_controls().min(op.controls.len());
    Some(match (op.kind, extra) {
        (kind, 0) => match kind {
            I => "id",
            X => "x",
            Y => "y",
            Z => "z",
            H => "h",
            S => "s",
            Sdg => "sdg",
            T => "t",
            Tdg => "tdg",
            RX => "rx",
            RY => "ry",
            RZ => "rz",
            Phase => "p",
            U3 => "u3",
            CX => "cx",
            CZ => "cz",
            CCX => "ccx",
            Swap => "swap",
            Measure | Barrier => return None,
        },
        (X, 1) => "cx",
        (X, 2) => "ccx",
        (Y, 1) => "cy",
        (Z, 1) => "cz",
        (H, 1) => "ch",
        (RX, 1) => "crx",
        (RY, 1) => "cry",
        (RZ, 1) => "crz",
        (Phase, 1) => "cp",
        (U3, 1) => "cu3",
        (Swap, 1) => "cswap",
        _ => return None,
    })
}

/// Writes a circuit as OpenQASM 2.0 over a single register `q`.
///
/// Intended for debugging; angles are printed with round-trip precision so
/// that parsing the output reproduces the same operations.
pub fn emit_qasm(circuit: &Circuit) -> Result<String> {
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(out, "qreg q[{}];", circuit.num_qubits);
    if circuit.ops.iter().any(|o| o.kind == GateKind::Measure) {
        let _ = writeln!(out, "creg c[{}];", circuit.num_qubits);
    }
    for op in &circuit.ops {
        match op.kind {
            GateKind::Measure => {
                let q = op.targets[0];
                let _ = writeln!(out, "measure q[{q}] -> c[{q}];");
                continue;
            }
            GateKind::Barrier => {
                if op.targets.is_empty() {
                    let _ = writeln!(out, "barrier q;");
                } else {
                    let qs: Vec<String> = op.targets.iter().map(|q| format!("q[{q}]")).collect();
                    let _ = writeln!(out, "barrier {};", qs.join(","));
                }
                continue;
            }
            _ => {}
        }
        let name = qasm_name(op).ok_or_else(|| {
            Error::UnsupportedGate(format!("`{op}` has no OpenQASM 2.0 spelling"))
        })?;
        if op.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!("`{op}` has a non-finite angle")));
        }
        out.push_str(name);
        if !op.params.is_empty() {
            let ps: Vec<String> = op.params.iter().map(|p| format!("{p:?}")).collect();
            let _ = write!(out, "({})", ps.join(","));
        }
        let qs: Vec<String> = op
            .controls
            .iter()
            .chain(&op.targets)
            .map(|q| format!("q[{q}]"))
            .collect();
        let _ = writeln!(out, " {};", qs.join(","));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{generate_qft, parse_qasm};
    use proptest::prelude::*;

    #[test]
    fn qft_round_trips() {
        let c = generate_qft(5).unwrap();
        let back = parse_qasm(&emit_qasm(&c).unwrap()).unwrap();
        assert_eq!(back.ops, c.ops);
    }

    #[test]
    fn unmappable_control_pattern_is_rejected() {
        let mut c = Circuit::new("x", 4);
        c.push(GateOp::new(GateKind::H, vec![], vec![0], vec![1, 2]));
        assert!(emit_qasm(&c).is_err());
    }

    fn arb_op(n: usize) -> impl Strategy<Value = GateOp> {
        let names = [
            "id", "x", "y", "z", "h", "s", "sdg", "t", "tdg", "rx", "ry", "rz", "p", "u3", "cx", "cz", "ccx",
            "swap", "cy", "ch", "crx", "cry", "crz", "cp", "cu3", "cswap",
        ];
        (
            prop::sample::select(names.to_vec()),
            prop::collection::vec(-10.0f64..10.0, 3),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        )
            .prop_map(|(name, angles, qs)| {
                let src = {
                    let (np, nq) = crate::circuit::qasm::builtin_arity(name).unwrap();
                    let ps: Vec<String> = angles[..np].iter().map(|a| format!("{a:?}")).collect();
                    let args: Vec<String> = qs[..nq].iter().map(|q| format!("q[{q}]")).collect();
                    if np == 0 {
                        format!("qreg q[4]; {name} {};", args.join(","))
                    } else {
                        format!("qreg q[4]; {name}({}) {};", ps.join(","), args.join(","))
                    }
                };
                parse_qasm(&src).unwrap().ops.remove(0)
            })
    }

    proptest! {
        #[test]
        fn emit_then_parse_is_identity(ops in prop::collection::vec(arb_op(4), 0..12)) {
            let c = Circuit { name: "p".into(), num_qubits: 4, ops };
            let back = parse_qasm(&emit_qasm(&c).unwrap()).unwrap();
            prop_assert_eq!(back.ops, c.ops);
        }
    }
}
