use std::fmt::Write;

use super::tree::Tree;
use crate::Scalar;

/// Graphviz DOT rendering in the familiar box-per-node layout.
///
/// Internal nodes read `X_k <= t`, then the impurity, sample count and
/// `value = [fail, pass]`; leaves omit the test. The left (true) edge of a
/// node is always emitted before its right edge.
pub fn to_dot<T: Scalar>(tree: &Tree<T>) -> String {
    let criterion = tree.params().criterion.name();
    let mut out = String::from("digraph Tree {\n");
    out.push_str("node [shape=box, style=\"rounded\", fontname=\"helvetica\"] ;\n");
    out.push_str("edge [fontname=\"helvetica\"] ;\n");

    let mut stack: Vec<(usize, Option<(usize, bool)>)> = vec![(tree.root_id(), None)];
    while let Some((id, parent)) = stack.pop() {
        let node = &tree.nodes()[id];
        let mut label = String::new();
        if let Some(s) = node.split {
            let _ = write!(label, "X_{} <= {}\\n", s.feature, s.threshold);
        }
        let _ = write!(
            label,
            "{criterion} = {:.4}\\nsamples = {}\\nvalue = {}",
            node.impurity,
            node.counts.total(),
            node.counts
        );
        let _ = writeln!(out, "{id} [label=\"{label}\"] ;");
        if let Some((p, left)) = parent {
            if p == tree.root_id() {
                let (angle, head) = if left { (45, "True") } else { (-45, "False") };
                let _ = writeln!(
                    out,
                    "{p} -> {id} [labeldistance=2.5, labelangle={angle}, headlabel=\"{head}\"] ;"
                );
            } else {
                let _ = writeln!(out, "{p} -> {id} ;");
            }
        }
        if let (Some(l), Some(r)) = (node.left, node.right) {
            stack.push((r, Some((id, false))));
            stack.push((l, Some((id, true))));
        }
    }
    out.push_str("}\n");
    out
}
