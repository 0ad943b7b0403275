//! Graphviz rendering of fitted structures.

use std::fmt::Write;

use super::{ConditionalForestDistribution, TreeDistribution};

fn edge_style(mi: f64) -> &'static str {
    if mi < 0.05 {
        "dotted"
    } else if mi < 0.2 {
        "dashed"
    } else {
        "solid"
    }
}

fn name(labels: Option<&[String]>, v: usize) -> String {
    labels.and_then(|l| l.get(v)).cloned().unwrap_or_else(|| v.to_string())
}

fn node_line(out: &mut String, id: &str, label: &str, marginal: &[f64], shape: Option<&str>) {
    let top = marginal.len() - 1;
    let _ = write!(out, "  {id} [label=\"{label}\\nP={:.3}\"", marginal[top]);
    if let Some(shape) = shape {
        let _ = write!(out, ", shape={shape}");
    }
    out.push_str("];\n");
}

/// Undirected graph with one node per variable, labelled with its id and
/// the probability of its highest value; edge style reflects mutual
/// information.
pub fn tree_to_dot(tree: &TreeDistribution, labels: Option<&[String]>) -> String {
    let mut out = String::from("graph tree {\n");
    for v in 0..tree.num_vars() {
        node_line(&mut out, &format!("x{v}"), &name(labels, v), tree.node_marginal(v), None);
    }
    for (&(u, v), mi) in tree.edges().iter().zip(tree.edge_mutual_information()) {
        let _ = writeln!(out, "  x{u} -- x{v} [style={}, label=\"{mi:.3}\"];", edge_style(mi));
    }
    out.push_str("}\n");
    out
}

/// Directed graph: within-slice edges have no arrowheads, cross edges point
/// from the conditioning variable (drawn as a box) to the anchored node.
pub fn conditional_to_dot(forest: &ConditionalForestDistribution, labels: Option<&[String]>) -> String {
    let b = forest.cardinality();
    let mut out = String::from("digraph forest {\n");
    for v in 0..forest.num_x() {
        node_line(&mut out, &format!("x{v}"), &name(labels, v), forest.node_marginal(v), None);
    }
    let (within_mi, cross_mi) = forest.edge_mutual_information();
    let mut drawn = vec![false; forest.num_y()];
    for (i, &(u, _)) in forest.cross_edges().iter().enumerate() {
        if !drawn[u] {
            drawn[u] = true;
            let joint = forest.cross_joint(i);
            let y_marg: Vec<f64> = joint.chunks_exact(b).map(|r| r.iter().sum()).collect();
            node_line(&mut out, &format!("y{u}"), &format!("{} (prev)", name(labels, u)), &y_marg, Some("box"));
        }
    }
    for (&(u, v), mi) in forest.within_edges().iter().zip(within_mi) {
        let _ = writeln!(out, "  x{u} -> x{v} [dir=none, style={}, label=\"{mi:.3}\"];", edge_style(mi));
    }
    for (&(u, v), mi) in forest.cross_edges().iter().zip(cross_mi) {
        let _ = writeln!(out, "  y{u} -> x{v} [style={}, label=\"{mi:.3}\"];", edge_style(mi));
    }
    out.push_str("}\n");
    out
}
