//! Decision-diagram engine for state vectors and operator matrices.
//!
//! A [`Package`] owns every node, the unique tables that keep nodes
//! canonical, the weight table that uniques complex values up to
//! [`TOL_C`], and the compute tables that memoize arithmetic. States and
//! operators are cheap `Copy` handles ([`StateDD`], [`MatrixDD`]) into one
//! package; mixing handles from different packages is a logic error.
//!
//! Qubit `q0` is the root level and the most significant bit of a basis
//! index. Diagrams are quasi-reduced: every non-zero path visits one node per
//! qubit. A zero weight always points at the terminal (a "0-stub").
//!
//! Node normalization: outgoing weights are divided by the weight of largest
//! magnitude (ties go to the lowest successor index), so that weight becomes
//! exactly 1 and every other has magnitude at most 1. The factor moves onto
//! the incoming edge.

mod dot;
mod values;

use rustc_hash::{FxHashMap, FxHashSet};

use num_complex::Complex64;
use rand::Rng;

use crate::circuit::GateOp;
use crate::error::{Error, Result};

pub use values::{ValueTable, TOL_C};

pub type Complex = Complex64;

const ZERO_C: Complex64 = Complex64::new(0.0, 0.0);
const ONE_C: Complex64 = Complex64::new(1.0, 0.0);

/// Index of a node inside a [`Package`]. Id 0 is the terminal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub const TERMINAL: NodeId = NodeId(0);

    pub fn is_terminal(self) -> bool {
        self == Self::TERMINAL
    }

    fn index(self) -> usize {
        self.0 as usize
    }
}

/// Weighted edge. Weights stored in a package are canonical table entries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub node: NodeId,
    pub weight: Complex64,
}

impl Edge {
    pub const ZERO: Edge = Edge {
        node: NodeId::TERMINAL,
        weight: ZERO_C,
    };
    pub const ONE: Edge = Edge {
        node: NodeId::TERMINAL,
        weight: ONE_C,
    };

    pub fn is_zero(&self) -> bool {
        self.weight.re == 0.0 && self.weight.im == 0.0
    }

    fn key(&self) -> EdgeKey {
        EdgeKey(self.node.0, self.weight.re.to_bits(), self.weight.im.to_bits())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct EdgeKey(u32, u64, u64);

fn weight_key(w: Complex64) -> (u64, u64) {
    (w.re.to_bits(), w.im.to_bits())
}

/// Vector node: successors for the qubit at `level` being |0> and |1>.
#[derive(Clone, Debug)]
struct VNode {
    level: u32,
    edges: [Edge; 2],
}

/// Matrix node: successors for the upper-left, upper-right, lower-left and
/// lower-right quadrants. `identity` marks nodes that are the identity on
/// their level and every level below.
#[derive(Clone, Debug)]
struct MNode {
    level: u32,
    edges: [Edge; 4],
    identity: bool,
}

const DEAD: u32 = u32::MAX;

/// A state vector of `num_qubits` qubits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateDD {
    pub root: Edge,
    pub num_qubits: usize,
}

/// A `2^n x 2^n` operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatrixDD {
    pub root: Edge,
    pub num_qubits: usize,
}

/// Size of the various tables, for diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PackageStats {
    pub vector_nodes: usize,
    pub matrix_nodes: usize,
    pub weights: usize,
    pub compute_entries: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct OperatorKey {
    num_qubits: usize,
    qubits: Vec<usize>,
    entries: Vec<(u64, u64)>,
}

#[derive(Clone, Debug, Default)]
struct ComputeTables {
    mul: FxHashMap<(NodeId, NodeId), Edge>,
    add: FxHashMap<(NodeId, NodeId, (u64, u64)), Edge>,
    inner: FxHashMap<(NodeId, NodeId), Complex64>,
    norm: FxHashMap<NodeId, f64>,
}

impl ComputeTables {
    fn len(&self) -> usize {
        self.mul.len() + self.add.len() + self.inner.len() + self.norm.len()
    }

    fn clear(&mut self) {
        self.mul.clear();
        self.add.clear();
        self.inner.clear();
        self.norm.clear();
    }
}

/// Arena holding nodes, unique tables, the weight table and compute tables.
///
/// A package is confined to one thread at a time; it is `Send` so workers
/// can own one each, and `Clone` so a prepared package can be used as a
/// template for independent runs.
#[derive(Clone, Debug)]
pub struct Package {
    values: ValueTable,
    vnodes: Vec<VNode>,
    mnodes: Vec<MNode>,
    vunique: FxHashMap<(u32, [EdgeKey; 2]), NodeId>,
    munique: FxHashMap<(u32, [EdgeKey; 4]), NodeId>,
    vfree: Vec<NodeId>,
    mfree: Vec<NodeId>,
    compute: ComputeTables,
    memoize: bool,
    operators: FxHashMap<OperatorKey, MatrixDD>,
}

impl Default for Package {
    fn default() -> Self {
        Self::new()
    }
}

impl Package {
    pub fn new() -> Self {
        let terminal_v = VNode {
            level: DEAD,
            edges: [Edge::ZERO; 2],
        };
        let terminal_m = MNode {
            level: DEAD,
            edges: [Edge::ZERO; 4],
            identity: false,
        };
        Package {
            values: ValueTable::new(),
            vnodes: vec![terminal_v],
            mnodes: vec![terminal_m],
            vunique: FxHashMap::default(),
            munique: FxHashMap::default(),
            vfree: Vec::new(),
            mfree: Vec::new(),
            compute: ComputeTables::default(),
            memoize: true,
            operators: FxHashMap::default(),
        }
    }

    /// Enables or disables the compute tables. Disabling also clears them.
    pub fn set_memoization(&mut self, enabled: bool) {
        self.memoize = enabled;
        if !enabled {
            self.compute.clear();
        }
    }

    pub fn clear_compute_tables(&mut self) {
        self.compute.clear();
    }

    pub fn stats(&self) -> PackageStats {
        PackageStats {
            vector_nodes: self.vunique.len(),
            matrix_nodes: self.munique.len(),
            weights: self.values.len(),
            compute_entries: self.compute.len(),
        }
    }

    /// Canonical representative of `c` in the weight table.
    pub fn canonical(&mut self, c: Complex64) -> Complex64 {
        self.values.complex(c)
    }

    // ------------------------------------------------------------------
    // node construction

    fn scaled(&mut self, e: Edge, factor: Complex64) -> Edge {
        if e.is_zero() {
            return Edge::ZERO;
        }
        let w = self.values.complex(e.weight * factor);
        if w == ZERO_C {
            Edge::ZERO
        } else {
            Edge { node: e.node, weight: w }
        }
    }

    fn terminal_edge(&mut self, w: Complex64) -> Edge {
        let w = self.values.complex(w);
        if w == ZERO_C {
            Edge::ZERO
        } else {
            Edge {
                node: NodeId::TERMINAL,
                weight: w,
            }
        }
    }

    /// Divides `edges` by their dominant weight in place; returns the factor,
    /// or `None` when every weight is zero.
    fn normalize<const N: usize>(&mut self, edges: &mut [Edge; N]) -> Option<Complex64> {
        for e in edges.iter_mut() {
            if e.weight.norm() < TOL_C {
                *e = Edge::ZERO;
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in edges.iter().enumerate() {
            if e.is_zero() {
                continue;
            }
            let mag = e.weight.norm();
            match best {
                Some((_, m)) if mag <= m + TOL_C => {}
                _ => best = Some((i, mag)),
            }
        }
        let (top, _) = best?;
        let factor = edges[top].weight;
        let canonical_factor = self.values.complex(factor);
        if canonical_factor == ZERO_C {
            return None;
        }
        for (i, e) in edges.iter_mut().enumerate() {
            if i == top {
                e.weight = ONE_C;
            } else if !e.is_zero() {
                let w = self.values.complex(e.weight / factor);
                *e = if w == ZERO_C {
                    Edge::ZERO
                } else {
                    Edge { node: e.node, weight: w }
                };
            }
        }
        Some(canonical_factor)
    }

    fn make_vnode(&mut self, level: u32, mut edges: [Edge; 2]) -> Edge {
        let Some(factor) = self.normalize(&mut edges) else {
            return Edge::ZERO;
        };
        let key = (level, [edges[0].key(), edges[1].key()]);
        let id = match self.vunique.get(&key) {
            Some(&id) => id,
            None => {
                let node = VNode { level, edges };
                let id = match self.vfree.pop() {
                    Some(id) => {
                        self.vnodes[id.index()] = node;
                        id
                    }
                    None => {
                        self.vnodes.push(node);
                        NodeId((self.vnodes.len() - 1) as u32)
                    }
                };
                self.vunique.insert(key, id);
                id
            }
        };
        Edge { node: id, weight: factor }
    }

    fn make_mnode(&mut self, level: u32, mut edges: [Edge; 4]) -> Edge {
        let Some(factor) = self.normalize(&mut edges) else {
            return Edge::ZERO;
        };
        let key = (level, [edges[0].key(), edges[1].key(), edges[2].key(), edges[3].key()]);
        let id = match self.munique.get(&key) {
            Some(&id) => id,
            None => {
                let identity = edges[1].is_zero()
                    && edges[2].is_zero()
                    && edges[0] == edges[3]
                    && edges[0].weight == ONE_C
                    && (edges[0].node.is_terminal() || self.mnode(edges[0].node).identity);
                let node = MNode { level, edges, identity };
                let id = match self.mfree.pop() {
                    Some(id) => {
                        self.mnodes[id.index()] = node;
                        id
                    }
                    None => {
                        self.mnodes.push(node);
                        NodeId((self.mnodes.len() - 1) as u32)
                    }
                };
                self.munique.insert(key, id);
                id
            }
        };
        Edge { node: id, weight: factor }
    }

    fn vnode(&self, id: NodeId) -> &VNode {
        &self.vnodes[id.index()]
    }

    fn mnode(&self, id: NodeId) -> &MNode {
        &self.mnodes[id.index()]
    }

    // ------------------------------------------------------------------
    // states

    /// Basis state `|bits>`; `bits[0]` is q0.
    pub fn make_basis_state(&mut self, num_qubits: usize, bits: &[bool]) -> Result<StateDD> {
        if num_qubits == 0 {
            return Err(Error::InvalidArgument("a state needs at least one qubit".into()));
        }
        if bits.len() != num_qubits {
            return Err(Error::InvalidArgument(format!(
                "bitstring has {} bits, expected {num_qubits}",
                bits.len()
            )));
        }
        let mut e = Edge::ONE;
        for q in (0..num_qubits).rev() {
            let edges = if bits[q] { [Edge::ZERO, e] } else { [e, Edge::ZERO] };
            e = self.make_vnode(q as u32, edges);
        }
        Ok(StateDD { root: e, num_qubits })
    }

    pub fn make_zero_state(&mut self, num_qubits: usize) -> Result<StateDD> {
        self.make_basis_state(num_qubits, &vec![false; num_qubits])
    }

    /// Builds a state from `2^n` dense amplitudes (index bit `n-1-q` is qubit q).
    pub fn state_from_amplitudes(&mut self, amplitudes: &[Complex64]) -> Result<StateDD> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude vector length {len} is not a power of two >= 2"
            )));
        }
        let n = len.trailing_zeros() as usize;
        let root = self.build_vector(0, amplitudes);
        Ok(StateDD { root, num_qubits: n })
    }

    fn build_vector(&mut self, level: u32, amps: &[Complex64]) -> Edge {
        if amps.len() == 1 {
            return self.terminal_edge(amps[0]);
        }
        let (lo, hi) = amps.split_at(amps.len() / 2);
        let e0 = self.build_vector(level + 1, lo);
        let e1 = self.build_vector(level + 1, hi);
        self.make_vnode(level, [e0, e1])
    }

    /// The all-zero vector over `num_qubits` qubits.
    pub fn zero_vector(&self, num_qubits: usize) -> StateDD {
        StateDD {
            root: Edge::ZERO,
            num_qubits,
        }
    }

    /// Amplitude of `|bits>`: the product of weights along its path.
    pub fn amplitude(&self, state: &StateDD, bits: &[bool]) -> Result<Complex64> {
        if bits.len() != state.num_qubits {
            return Err(Error::InvalidArgument(format!(
                "bitstring has {} bits, state has {} qubits",
                bits.len(),
                state.num_qubits
            )));
        }
        let mut w = state.root.weight;
        let mut node = state.root.node;
        for &b in bits {
            if w == ZERO_C || node.is_terminal() {
                break;
            }
            let e = self.vnode(node).edges[b as usize];
            w *= e.weight;
            node = e.node;
        }
        Ok(w)
    }

    /// Expands a state into its `2^n` amplitudes.
    pub fn to_amplitudes(&self, state: &StateDD) -> Vec<Complex64> {
        let mut out = vec![ZERO_C; 1usize << state.num_qubits];
        self.expand_vector(state.root, state.num_qubits, 0, ONE_C, &mut out);
        out
    }

    fn expand_vector(&self, e: Edge, remaining: usize, offset: usize, acc: Complex64, out: &mut [Complex64]) {
        if e.is_zero() {
            return;
        }
        let w = acc * e.weight;
        if remaining == 0 {
            out[offset] = w;
            return;
        }
        let node = self.vnode(e.node);
        let half = 1usize << (remaining - 1);
        self.expand_vector(node.edges[0], remaining - 1, offset, w, out);
        self.expand_vector(node.edges[1], remaining - 1, offset + half, w, out);
    }

    // ------------------------------------------------------------------
    // operators

    /// Builds the full operator for a dense matrix on the ascending list of
    /// `qubits` (row-major, side `2^k`, `qubits[0]` most significant), with
    /// identity on every other qubit.
    pub fn local_operator(&mut self, num_qubits: usize, qubits: &[usize], matrix: &[Complex64]) -> Result<MatrixDD> {
        let k = qubits.len();
        if num_qubits == 0 {
            return Err(Error::InvalidArgument("an operator needs at least one qubit".into()));
        }
        if matrix.len() != (1usize << (2 * k)) {
            return Err(Error::InvalidArgument(format!(
                "matrix has {} entries, expected {}",
                matrix.len(),
                1usize << (2 * k)
            )));
        }
        if qubits.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("operator qubits must be strictly ascending".into()));
        }
        if let Some(&q) = qubits.iter().find(|&&q| q >= num_qubits) {
            return Err(Error::InvalidArgument(format!("qubit {q} out of range for {num_qubits} qubits")));
        }
        let key = OperatorKey {
            num_qubits,
            qubits: qubits.to_vec(),
            entries: matrix.iter().map(|&c| weight_key(c)).collect(),
        };
        if let Some(&m) = self.operators.get(&key) {
            return Ok(m);
        }
        let mut memo = FxHashMap::default();
        let root = self.build_local(0, num_qubits, qubits, matrix, 0, 0, &mut memo);
        let op = MatrixDD { root, num_qubits };
        self.operators.insert(key, op);
        Ok(op)
    }

    #[allow(clippy::too_many_arguments)]
    fn build_local(
        &mut self,
        level: usize,
        n: usize,
        qubits: &[usize],
        matrix: &[Complex64],
        row: usize,
        col: usize,
        memo: &mut FxHashMap<(usize, usize, usize), Edge>,
    ) -> Edge {
        if level == n {
            let dim = 1usize << qubits.len();
            return self.terminal_edge(matrix[row * dim + col]);
        }
        if let Some(&e) = memo.get(&(level, row, col)) {
            return e;
        }
        let e = if qubits.contains(&level) {
            let mut edges = [Edge::ZERO; 4];
            for r in 0..2 {
                for c in 0..2 {
                    edges[2 * r + c] = self.build_local(level + 1, n, qubits, matrix, 2 * row + r, 2 * col + c, memo);
                }
            }
            self.make_mnode(level as u32, edges)
        } else {
            let below = self.build_local(level + 1, n, qubits, matrix, row, col, memo);
            self.make_mnode(level as u32, [below, Edge::ZERO, Edge::ZERO, below])
        };
        memo.insert((level, row, col), e);
        e
    }

    /// Builds a full operator from a dense row-major `2^n x 2^n` matrix.
    pub fn matrix_from_dense(&mut self, num_qubits: usize, matrix: &[Complex64]) -> Result<MatrixDD> {
        let qubits: Vec<usize> = (0..num_qubits).collect();
        self.local_operator(num_qubits, &qubits, matrix)
    }

    pub fn identity(&mut self, num_qubits: usize) -> Result<MatrixDD> {
        self.local_operator(num_qubits, &[], &[ONE_C])
    }

    /// Operator of a gate on an `num_qubits`-qubit register.
    pub fn gate_matrix(&mut self, gate: &GateOp, num_qubits: usize) -> Result<MatrixDD> {
        if !gate.kind.is_unitary() {
            return Err(Error::UnsupportedGate(format!("`{}` has no operator matrix", gate.kind)));
        }
        if gate.params.len() != gate.kind.num_params() {
            return Err(Error::InvalidArgument(format!(
                "`{}` takes {} parameter(s), got {}",
                gate.kind,
                gate.kind.num_params(),
                gate.params.len()
            )));
        }
        if gate.targets.len() != gate.kind.num_targets() {
            return Err(Error::InvalidArgument(format!(
                "`{}` takes {} target(s), got {}",
                gate.kind,
                gate.kind.num_targets(),
                gate.targets.len()
            )));
        }
        let mut seen = vec![false; num_qubits];
        for q in gate.operands() {
            if q >= num_qubits {
                return Err(Error::InvalidArgument(format!("qubit {q} out of range for {num_qubits} qubits")));
            }
            if seen[q] {
                return Err(Error::InvalidArgument(format!("qubit {q} used twice in `{gate}`")));
            }
            seen[q] = true;
        }
        let (qubits, m) = gate
            .local_unitary()
            .ok_or_else(|| Error::UnsupportedGate(gate.kind.to_string()))?;
        self.local_operator(num_qubits, &qubits, &m)
    }

    /// Matrix entry `(row, col)`, bits given per qubit.
    pub fn matrix_entry(&self, op: &MatrixDD, row: &[bool], col: &[bool]) -> Complex64 {
        let mut w = op.root.weight;
        let mut node = op.root.node;
        for (r, c) in row.iter().zip(col) {
            if w == ZERO_C || node.is_terminal() {
                break;
            }
            let e = self.mnode(node).edges[2 * (*r as usize) + *c as usize];
            w *= e.weight;
            node = e.node;
        }
        w
    }

    /// Expands an operator into a dense row-major matrix.
    pub fn to_dense_matrix(&self, op: &MatrixDD) -> Vec<Complex64> {
        let dim = 1usize << op.num_qubits;
        let mut out = vec![ZERO_C; dim * dim];
        self.expand_matrix(op.root, op.num_qubits, 0, 0, dim, ONE_C, &mut out);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn expand_matrix(
        &self,
        e: Edge,
        remaining: usize,
        row: usize,
        col: usize,
        dim: usize,
        acc: Complex64,
        out: &mut [Complex64],
    ) {
        if e.is_zero() {
            return;
        }
        let w = acc * e.weight;
        if remaining == 0 {
            out[row * dim + col] = w;
            return;
        }
        let node = self.mnode(e.node);
        let half = 1usize << (remaining - 1);
        for r in 0..2 {
            for c in 0..2 {
                self.expand_matrix(node.edges[2 * r + c], remaining - 1, row + r * half, col + c * half, dim, w, out);
            }
        }
    }

    // ------------------------------------------------------------------
    // arithmetic

    /// Matrix-vector product `op * state`.
    pub fn apply_matrix(&mut self, op: &MatrixDD, state: &StateDD) -> Result<StateDD> {
        if op.num_qubits != state.num_qubits {
            return Err(Error::InvalidArgument(format!(
                "operator on {} qubits applied to a {}-qubit state",
                op.num_qubits, state.num_qubits
            )));
        }
        let root = self.mul_edges(op.root, state.root);
        Ok(StateDD {
            root,
            num_qubits: state.num_qubits,
        })
    }

    fn mul_edges(&mut self, m: Edge, v: Edge) -> Edge {
        if m.is_zero() || v.is_zero() {
            return Edge::ZERO;
        }
        let r = self.mul_nodes(m.node, v.node);
        self.scaled(r, m.weight * v.weight)
    }

    fn mul_nodes(&mut self, m: NodeId, v: NodeId) -> Edge {
        if m.is_terminal() || v.is_terminal() {
            debug_assert!(m.is_terminal() && v.is_terminal());
            return Edge::ONE;
        }
        if self.memoize {
            if let Some(&e) = self.compute.mul.get(&(m, v)) {
                return e;
            }
        }
        if self.mnode(m).identity {
            return Edge { node: v, weight: ONE_C };
        }
        let mn = self.mnode(m).clone();
        let ve = self.vnode(v).edges;
        debug_assert_eq!(mn.level, self.vnode(v).level);
        let mut out = [Edge::ZERO; 2];
        for (row, slot) in out.iter_mut().enumerate() {
            let a = self.mul_edges(mn.edges[2 * row], ve[0]);
            let b = self.mul_edges(mn.edges[2 * row + 1], ve[1]);
            *slot = self.add_edges(a, b);
        }
        let r = self.make_vnode(mn.level, out);
        if self.memoize {
            self.compute.mul.insert((m, v), r);
        }
        r
    }

    /// Elementwise sum of two states.
    pub fn add(&mut self, a: &StateDD, b: &StateDD) -> Result<StateDD> {
        if a.num_qubits != b.num_qubits {
            return Err(Error::InvalidArgument(format!(
                "cannot add a {}-qubit state to a {}-qubit state",
                a.num_qubits, b.num_qubits
            )));
        }
        let root = self.add_edges(a.root, b.root);
        Ok(StateDD {
            root,
            num_qubits: a.num_qubits,
        })
    }

    fn add_edges(&mut self, a: Edge, b: Edge) -> Edge {
        if a.is_zero() {
            return self.scaled(b, ONE_C);
        }
        if b.is_zero() {
            return self.scaled(a, ONE_C);
        }
        if a.node == b.node {
            let w = self.values.complex(a.weight + b.weight);
            return if w == ZERO_C { Edge::ZERO } else { Edge { node: a.node, weight: w } };
        }
        // a + b = a.w * (A + (b.w / a.w) * B)
        let ratio = self.values.complex(b.weight / a.weight);
        if ratio == ZERO_C {
            return self.scaled(a, ONE_C);
        }
        let key = (a.node, b.node, weight_key(ratio));
        let cached = if self.memoize { self.compute.add.get(&key).copied() } else { None };
        let r = match cached {
            Some(r) => r,
            None => {
                let an = self.vnode(a.node).clone();
                let be = self.vnode(b.node).edges;
                let mut out = [Edge::ZERO; 2];
                for (i, slot) in out.iter_mut().enumerate() {
                    let scaled_b = self.scaled(be[i], ratio);
                    *slot = self.add_edges(an.edges[i], scaled_b);
                }
                let r = self.make_vnode(an.level, out);
                if self.memoize {
                    self.compute.add.insert(key, r);
                }
                r
            }
        };
        self.scaled(r, a.weight)
    }

    /// Multiplies every amplitude by `c`.
    pub fn scale(&mut self, state: &StateDD, c: Complex64) -> StateDD {
        StateDD {
            root: self.scaled(state.root, c),
            num_qubits: state.num_qubits,
        }
    }

    /// Squared Euclidean norm `sum |a_i|^2`.
    pub fn norm_squared(&mut self, state: &StateDD) -> f64 {
        if state.root.is_zero() {
            return 0.0;
        }
        state.root.weight.norm_sqr() * self.node_norm(state.root.node)
    }

    fn node_norm(&mut self, id: NodeId) -> f64 {
        if id.is_terminal() {
            return 1.0;
        }
        if self.memoize {
            if let Some(&s) = self.compute.norm.get(&id) {
                return s;
            }
        }
        let edges = self.vnode(id).edges;
        let mut s = 0.0;
        for e in edges {
            if !e.is_zero() {
                s += e.weight.norm_sqr() * self.node_norm(e.node);
            }
        }
        if self.memoize {
            self.compute.norm.insert(id, s);
        }
        s
    }

    /// Probability that measuring `qubit` of a normalized `state` gives 1.
    pub fn qubit_one_probability(&mut self, state: &StateDD, qubit: usize) -> Result<f64> {
        if qubit >= state.num_qubits {
            return Err(Error::InvalidArgument(format!(
                "qubit {qubit} out of range for {} qubits",
                state.num_qubits
            )));
        }
        if state.root.is_zero() {
            return Ok(0.0);
        }
        // Path mass flowing into each node, one level at a time; in a
        // quasi-reduced diagram level l is only entered from level l - 1.
        let mut frontier: Vec<(NodeId, f64)> = vec![(state.root.node, state.root.weight.norm_sqr())];
        for _ in 0..qubit {
            let mut next: FxHashMap<NodeId, f64> = FxHashMap::default();
            for &(id, mass) in &frontier {
                for e in self.vnode(id).edges {
                    if !e.is_zero() {
                        *next.entry(e.node).or_insert(0.0) += mass * e.weight.norm_sqr();
                    }
                }
            }
            frontier = next.into_iter().collect();
            frontier.sort_unstable_by_key(|&(id, _)| id);
        }
        let mut p1 = 0.0;
        for &(id, mass) in &frontier {
            let e = self.vnode(id).edges[1];
            if !e.is_zero() {
                p1 += mass * e.weight.norm_sqr() * self.node_norm(e.node);
            }
        }
        Ok(p1)
    }

    /// `<a|b> = sum conj(a_i) b_i`.
    pub fn inner_product(&mut self, a: &StateDD, b: &StateDD) -> Result<Complex64> {
        if a.num_qubits != b.num_qubits {
            return Err(Error::InvalidArgument(format!(
                "inner product of a {}-qubit and a {}-qubit state",
                a.num_qubits, b.num_qubits
            )));
        }
        Ok(self.inner_edges(a.root, b.root))
    }

    fn inner_edges(&mut self, a: Edge, b: Edge) -> Complex64 {
        if a.is_zero() || b.is_zero() {
            return ZERO_C;
        }
        a.weight.conj() * b.weight * self.inner_nodes(a.node, b.node)
    }

    fn inner_nodes(&mut self, a: NodeId, b: NodeId) -> Complex64 {
        if a.is_terminal() || b.is_terminal() {
            debug_assert!(a.is_terminal() && b.is_terminal());
            return ONE_C;
        }
        if self.memoize {
            if let Some(&c) = self.compute.inner.get(&(a, b)) {
                return c;
            }
        }
        let ae = self.vnode(a).edges;
        let be = self.vnode(b).edges;
        let s = self.inner_edges(ae[0], be[0]) + self.inner_edges(ae[1], be[1]);
        if self.memoize {
            self.compute.inner.insert((a, b), s);
        }
        s
    }

    /// Samples a full computational-basis measurement outcome.
    ///
    /// Draws one uniform variate per qubit, from q0 downwards; the branch
    /// probability at each node is `|w|^2 * norm(subtree)` over the parent mass.
    pub fn measure_all<R: Rng + ?Sized>(&mut self, state: &StateDD, rng: &mut R) -> Result<Vec<bool>> {
        let total = self.norm_squared(state);
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::NumericDegeneracy(format!(
                "cannot measure a state with squared norm {total}"
            )));
        }
        let mut bits = Vec::with_capacity(state.num_qubits);
        let mut node = state.root.node;
        for _ in 0..state.num_qubits {
            let edges = self.vnode(node).edges;
            let p0 = if edges[0].is_zero() { 0.0 } else { edges[0].weight.norm_sqr() * self.node_norm(edges[0].node) };
            let p1 = if edges[1].is_zero() { 0.0 } else { edges[1].weight.norm_sqr() * self.node_norm(edges[1].node) };
            let u: f64 = rng.random::<f64>() * (p0 + p1);
            let bit = p1 > 0.0 && (p0 == 0.0 || u >= p0);
            bits.push(bit);
            node = edges[bit as usize].node;
        }
        Ok(bits)
    }

    // ------------------------------------------------------------------
    // inspection

    /// Number of distinct non-terminal nodes reachable from the state root.
    pub fn node_count(&self, state: &StateDD) -> usize {
        let mut seen = FxHashSet::default();
        let mut stack = vec![state.root];
        while let Some(e) = stack.pop() {
            if e.is_zero() || e.node.is_terminal() || !seen.insert(e.node) {
                continue;
            }
            stack.extend(self.vnode(e.node).edges);
        }
        seen.len()
    }

    pub fn matrix_node_count(&self, op: &MatrixDD) -> usize {
        let mut seen = FxHashSet::default();
        let mut stack = vec![op.root];
        while let Some(e) = stack.pop() {
            if e.is_zero() || e.node.is_terminal() || !seen.insert(e.node) {
                continue;
            }
            stack.extend(self.mnode(e.node).edges);
        }
        seen.len()
    }

    /// True when every reachable node carries one weight exactly equal to 1
    /// (the first of largest magnitude), every weight has magnitude at most
    /// 1, and zero weights point at the terminal.
    pub fn is_normalized(&self, state: &StateDD) -> bool {
        let mut seen = FxHashSet::default();
        let mut stack = vec![state.root.node];
        while let Some(id) = stack.pop() {
            if id.is_terminal() || !seen.insert(id) {
                continue;
            }
            let edges = self.vnode(id).edges;
            if !node_weights_normalized(&edges) {
                return false;
            }
            stack.extend(edges.iter().filter(|e| !e.is_zero()).map(|e| e.node));
        }
        true
    }

    pub fn is_matrix_normalized(&self, op: &MatrixDD) -> bool {
        let mut seen = FxHashSet::default();
        let mut stack = vec![op.root.node];
        while let Some(id) = stack.pop() {
            if id.is_terminal() || !seen.insert(id) {
                continue;
            }
            let edges = self.mnode(id).edges;
            if !node_weights_normalized(&edges) {
                return false;
            }
            stack.extend(edges.iter().filter(|e| !e.is_zero()).map(|e| e.node));
        }
        true
    }

    // ------------------------------------------------------------------
    // memory management

    /// Releases every node not reachable from `states`, `ops` or the cached
    /// operators, and clears the compute tables. Surviving handles stay valid.
    pub fn collect_garbage(&mut self, states: &[StateDD], ops: &[MatrixDD]) {
        self.compute.clear();
        let mut vlive = vec![false; self.vnodes.len()];
        let mut mlive = vec![false; self.mnodes.len()];
        vlive[0] = true;
        mlive[0] = true;

        let mut stack: Vec<NodeId> = states.iter().map(|s| s.root.node).collect();
        while let Some(id) = stack.pop() {
            if vlive[id.index()] {
                continue;
            }
            vlive[id.index()] = true;
            stack.extend(self.vnodes[id.index()].edges.iter().map(|e| e.node));
        }
        let mut stack: Vec<NodeId> = ops
            .iter()
            .chain(self.operators.values())
            .map(|m| m.root.node)
            .collect();
        while let Some(id) = stack.pop() {
            if mlive[id.index()] {
                continue;
            }
            mlive[id.index()] = true;
            stack.extend(self.mnodes[id.index()].edges.iter().map(|e| e.node));
        }

        self.vunique.retain(|_, id| vlive[id.index()]);
        self.munique.retain(|_, id| mlive[id.index()]);
        for (i, node) in self.vnodes.iter_mut().enumerate() {
            if !vlive[i] && node.level != DEAD {
                node.level = DEAD;
                self.vfree.push(NodeId(i as u32));
            }
        }
        for (i, node) in self.mnodes.iter_mut().enumerate() {
            if !mlive[i] && node.level != DEAD {
                node.level = DEAD;
                self.mfree.push(NodeId(i as u32));
            }
        }
    }

    /// Drops the cached gate operators, making them collectable.
    pub fn clear_operator_cache(&mut self) {
        self.operators.clear();
    }

    /// Graphviz rendering of a state: node label = qubit level, edge label = weight.
    pub fn to_dot(&self, state: &StateDD) -> String {
        dot::vector_dot(self, state)
    }

    pub fn matrix_to_dot(&self, op: &MatrixDD) -> String {
        dot::matrix_dot(self, op)
    }
}

fn node_weights_normalized(edges: &[Edge]) -> bool {
    let max = edges.iter().map(|e| e.weight.norm()).fold(0.0, f64::max);
    let first_max = edges.iter().position(|e| e.weight.norm() >= max - TOL_C);
    match first_max {
        Some(i) if edges[i].weight == ONE_C => {}
        _ => return false,
    }
    edges.iter().all(|e| {
        e.weight.norm() <= 1.0 + 1e-12 && (!e.is_zero() || e.node.is_terminal())
    })
}

/// Parses a bitstring of `0`/`1` characters; the first character is q0.
pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::InvalidArgument(format!("invalid bit `{other}` in `{s}`"))),
        })
        .collect()
}

pub fn format_bits(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Basis index of a bitstring, q0 most significant.
pub fn bits_to_index(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

pub fn index_to_bits(index: usize, num_qubits: usize) -> Vec<bool> {
    (0..num_qubits).map(|q| (index >> (num_qubits - 1 - q)) & 1 == 1).collect()
}
