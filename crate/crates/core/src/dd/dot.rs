use std::collections::HashSet;
use std::fmt::Write;

use num_complex::Complex64;

use super::{Edge, MatrixDD, NodeId, Package, StateDD};

fn label(w: Complex64) -> String {
    if w.im == 0.0 {
        format!("{:.6}", w.re)
    } else {
        format!("{:.6}{:+.6}i", w.re, w.im)
    }
}

fn render(root: Edge, arity: usize, children: impl Fn(NodeId) -> (u32, Vec<Edge>)) -> String {
    let mut out = String::from("digraph dd {\n  terminal [shape=box,label=\"1\"];\n");
    let _ = writeln!(out, "  root [shape=point];");
    if root.is_zero() {
        let _ = writeln!(out, "  zero [shape=plaintext,label=\"0\"];\n  root -> zero [label=\"0\"];\n}}");
        return out;
    }
    let name = |id: NodeId| {
        if id.is_terminal() {
            "terminal".to_string()
        } else {
            format!("n{}", id.0)
        }
    };
    let _ = writeln!(out, "  root -> {} [label=\"{}\"];", name(root.node), label(root.weight));
    let mut seen = HashSet::new();
    let mut stack = vec![root.node];
    let mut stubs = 0usize;
    while let Some(id) = stack.pop() {
        if id.is_terminal() || !seen.insert(id) {
            continue;
        }
        let (level, edges) = children(id);
        let _ = writeln!(out, "  {} [shape=circle,label=\"q{}\"];", name(id), level);
        for (i, e) in edges.iter().enumerate().take(arity) {
            if e.is_zero() {
                let _ = writeln!(out, "  z{stubs} [shape=plaintext,label=\"0\"];");
                let _ = writeln!(out, "  {} -> z{stubs} [taillabel=\"{i}\"];", name(id));
                stubs += 1;
            } else {
                let _ = writeln!(
                    out,
                    "  {} -> {} [taillabel=\"{i}\",label=\"{}\"];",
                    name(id),
                    name(e.node),
                    label(e.weight)
                );
                stack.push(e.node);
            }
        }
    }
    out.push_str("}\n");
    out
}

pub(super) fn vector_dot(pkg: &Package, state: &StateDD) -> String {
    render(state.root, 2, |id| {
        let n = pkg.vnode(id);
        (n.level, n.edges.to_vec())
    })
}

pub(super) fn matrix_dot(pkg: &Package, op: &MatrixDD) -> String {
    render(op.root, 4, |id| {
        let n = pkg.mnode(id);
        (n.level, n.edges.to_vec())
    })
}
