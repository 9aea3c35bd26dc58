use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// 2x2 matrix in row-major order.
pub type Matrix2 = [[Complex64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    I,
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Tdg,
    RX,
    RY,
    RZ,
    Phase,
    U3,
    CX,
    CZ,
    CCX,
    Swap,
    Measure,
    Barrier,
}

impl GateKind {
    pub const ALL: [GateKind; 20] = [
        GateKind::I,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::S,
        GateKind::Sdg,
        GateKind::T,
        GateKind::Tdg,
        GateKind::RX,
        GateKind::RY,
        GateKind::RZ,
        GateKind::Phase,
        GateKind::U3,
        GateKind::CX,
        GateKind::CZ,
        GateKind::CCX,
        GateKind::Swap,
        GateKind::Measure,
        GateKind::Barrier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::I => "id",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::RX => "rx",
            GateKind::RY => "ry",
            GateKind::RZ => "rz",
            GateKind::Phase => "p",
            GateKind::U3 => "u3",
            GateKind::CX => "cx",
            GateKind::CZ => "cz",
            GateKind::CCX => "ccx",
            GateKind::Swap => "swap",
            GateKind::Measure => "measure",
            GateKind::Barrier => "barrier",
        }
    }

    /// Number of angle parameters.
    pub fn num_params(self) -> usize {
        match self {
            GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::Phase => 1,
            GateKind::U3 => 3,
            _ => 0,
        }
    }

    /// Number of target qubits.
    pub fn num_targets(self) -> usize {
        match self {
            GateKind::Swap => 2,
            GateKind::Barrier => 0,
            _ => 1,
        }
    }

    /// Controls that are part of the kind itself (`CX` has one, `CCX` two).
    pub fn implied_controls(self) -> usize {
        match self {
            GateKind::CX | GateKind::CZ => 1,
            GateKind::CCX => 2,
            _ => 0,
        }
    }

    pub fn is_unitary(self) -> bool {
        !matches!(self, GateKind::Measure | GateKind::Barrier)
    }

    /// Matrix applied to the target when all controls are |1>.
    ///
    /// Returns `None` for SWAP (a two-target permutation) and for the
    /// non-unitary markers.
    pub fn target_matrix(self, params: &[f64]) -> Option<Matrix2> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let zero = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let m = match self {
            GateKind::I => [[one, zero], [zero, one]],
            GateKind::X | GateKind::CX | GateKind::CCX => [[zero, one], [one, zero]],
            GateKind::Y => [[zero, c(0.0, -1.0)], [c(0.0, 1.0), zero]],
            GateKind::Z | GateKind::CZ => [[one, zero], [zero, -one]],
            GateKind::H => {
                let h = c(FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            GateKind::S => [[one, zero], [zero, c(0.0, 1.0)]],
            GateKind::Sdg => [[one, zero], [zero, c(0.0, -1.0)]],
            GateKind::T => [[one, zero], [zero, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]],
            GateKind::Tdg => [[one, zero], [zero, Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4)]],
            GateKind::RX => {
                let (s, co) = (params[0] / 2.0).sin_cos();
                [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
            }
            GateKind::RY => {
                let (s, co) = (params[0] / 2.0).sin_cos();
                [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
            }
            GateKind::RZ => {
                let half = params[0] / 2.0;
                [
                    [Complex64::from_polar(1.0, -half), zero],
                    [zero, Complex64::from_polar(1.0, half)],
                ]
            }
            GateKind::Phase => [[one, zero], [zero, Complex64::from_polar(1.0, params[0])]],
            GateKind::U3 => {
                let (theta, phi, lambda) = (params[0], params[1], params[2]);
                let (s, co) = (theta / 2.0).sin_cos();
                [
                    [c(co, 0.0), -Complex64::from_polar(s, lambda)],
                    [Complex64::from_polar(s, phi), Complex64::from_polar(co, phi + lambda)],
                ]
            }
            GateKind::Swap | GateKind::Measure | GateKind::Barrier => return None,
        };
        Some(m)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One gate application. Qubit indices are global; q0 is the most
/// significant bit of a basis-state index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub params: Vec<f64>,
    pub targets: Vec<usize>,
    pub controls: Vec<usize>,
}

impl GateOp {
    pub fn new(kind: GateKind, params: Vec<f64>, targets: Vec<usize>, controls: Vec<usize>) -> Self {
        GateOp {
            kind,
            params,
            targets,
            controls,
        }
    }

    pub fn single(kind: GateKind, target: usize) -> Self {
        Self::new(kind, vec![], vec![target], vec![])
    }

    pub fn rotation(kind: GateKind, angle: f64, target: usize) -> Self {
        Self::new(kind, vec![angle], vec![target], vec![])
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self::new(GateKind::CX, vec![], vec![target], vec![control])
    }

    pub fn controlled_phase(angle: f64, control: usize, target: usize) -> Self {
        Self::new(GateKind::Phase, vec![angle], vec![target], vec![control])
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Self::new(GateKind::Swap, vec![], vec![a, b], vec![])
    }

    /// Targets followed by controls, in that order.
    pub fn operands(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets.iter().chain(self.controls.iter()).copied()
    }

    /// Dense operator on the sorted set of involved qubits.
    ///
    /// The returned qubit list is ascending; local basis index bit `k-1-j`
    /// corresponds to `qubits[j]`, so the lowest global qubit is the most
    /// significant local bit. Matrix is row-major with side `2^k`.
    pub fn local_unitary(&self) -> Option<(Vec<usize>, Vec<Complex64>)> {
        if !self.kind.is_unitary() {
            return None;
        }
        let mut qubits: Vec<usize> = self.operands().collect();
        qubits.sort_unstable();
        qubits.dedup();
        let k = qubits.len();
        let dim = 1usize << k;
        let bit_of = |q: usize| k - 1 - qubits.iter().position(|&x| x == q).unwrap();
        let control_mask: usize = self.controls.iter().map(|&q| 1 << bit_of(q)).sum();
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];

        if self.kind == GateKind::Swap {
            let (a, b) = (bit_of(self.targets[0]), bit_of(self.targets[1]));
            for col in 0..dim {
                let row = if col & control_mask == control_mask {
                    let (ba, bb) = ((col >> a) & 1, (col >> b) & 1);
                    (col & !(1 << a) & !(1 << b)) | (bb << a) | (ba << b)
                } else {
                    col
                };
                m[row * dim + col] = Complex64::new(1.0, 0.0);
            }
            return Some((qubits, m));
        }

        let u = self.kind.target_matrix(&self.params)?;
        let t = bit_of(self.targets[0]);
        for col in 0..dim {
            if col & control_mask != control_mask {
                m[col * dim + col] = Complex64::new(1.0, 0.0);
                continue;
            }
            let cbit = (col >> t) & 1;
            for rbit in 0..2 {
                let row = (col & !(1 << t)) | (rbit << t);
                m[row * dim + col] = u[rbit][cbit];
            }
        }
        Some((qubits, m))
    }
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if !self.params.is_empty() {
            let ps: Vec<String> = self.params.iter().map(|p| format!("{p}")).collect();
            write!(f, "({})", ps.join(","))?;
        }
        let qs: Vec<String> = self
            .controls
            .iter()
            .chain(self.targets.iter())
            .map(|q| format!("q{q}"))
            .collect();
        write!(f, " {}", qs.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_unitary(m: &[Complex64], dim: usize) -> bool {
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..dim {
                    acc += m[i * dim + k] * m[j * dim + k].conj();
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                if (acc - expect).norm() > 1e-12 {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn every_unitary_kind_yields_a_unitary_local_matrix() {
        for kind in GateKind::ALL {
            if !kind.is_unitary() {
                continue;
            }
            let params: Vec<f64> = (0..kind.num_params()).map(|i| 0.37 + i as f64).collect();
            let targets: Vec<usize> = (0..kind.num_targets()).collect();
            let controls: Vec<usize> = (0..kind.implied_controls()).map(|i| 5 + i).collect();
            let op = GateOp::new(kind, params, targets, controls);
            let (qs, m) = op.local_unitary().unwrap();
            assert!(is_unitary(&m, 1 << qs.len()), "{kind}");
        }
    }

    #[test]
    fn cnot_local_matrix_matches_textbook() {
        let (qs, m) = GateOp::cx(0, 1).local_unitary().unwrap();
        assert_eq!(qs, vec![0, 1]);
        let expect = [
            [1., 0., 0., 0.],
            [0., 1., 0., 0.],
            [0., 0., 0., 1.],
            [0., 0., 1., 0.],
        ];
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(m[r * 4 + c], Complex64::new(expect[r][c], 0.0));
            }
        }
    }

    #[test]
    fn reversed_cnot_uses_lowest_qubit_as_most_significant() {
        // control q1, target q0: flips the high local bit when the low bit is set.
        let (_, m) = GateOp::cx(1, 0).local_unitary().unwrap();
        assert_eq!(m[3 * 4 + 1], Complex64::new(1.0, 0.0));
        assert_eq!(m[1 * 4 + 3], Complex64::new(1.0, 0.0));
        assert_eq!(m[0], Complex64::new(1.0, 0.0));
        assert_eq!(m[2 * 4 + 2], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn markers_have_no_matrix() {
        assert!(GateOp::single(GateKind::Measure, 0).local_unitary().is_none());
        assert!(GateKind::Barrier.target_matrix(&[]).is_none());
    }
}
